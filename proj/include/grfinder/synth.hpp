#pragma once

// Deterministic template-grammar corpus generator. Gold GR annotations are
// assigned per template, so every generated sentence is consistently labeled
// by construction.

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grfinder/corpus.hpp"

namespace grf {

struct SynthConfig {
    std::uint64_t seed = 42;
    int sentences = 250;
    double train_fraction = 0.75;
};

struct GrammarSpec {
    struct TokenSpec {
        std::string form;
        std::string pos;
        std::map<std::string, std::string> aux;
    };
    struct ChunkVariant {
        std::vector<TokenSpec> tokens;
        int head = -1;  // index within tokens; -1 means last
    };
    struct LexEntry {
        std::string bio;  // "NP", "VP", ..., or "O" for stray lexemes
        std::vector<ChunkVariant> variants;
    };
    struct SlotSpec {
        std::string id;               // empty for anonymous filler blocks
        std::string lex;
        bool repeat = false;
        bool named_distance = false;  // repeat count from the modifier-distance distribution
        std::vector<std::pair<int, int>> weights;  // inline repeat weights (count, weight)
        int offset = 0;  // structural chunks already between modifier and verb
    };
    struct GrSpec {
        std::string src;
        std::string tgt;
        GrLabel label = GrLabel::None;
    };
    struct TemplateSpec {
        std::string name;
        int weight = 1;
        std::vector<SlotSpec> slots;
        std::vector<GrSpec> grs;
    };

    std::map<std::string, LexEntry> lexicon;
    std::vector<std::pair<int, int>> modifier_distance;  // (intervening chunks, weight)
    std::vector<TemplateSpec> templates;
};

namespace detail {

inline std::vector<std::pair<int, int>> parse_weight_map(const nlohmann::json& j) {
    std::vector<std::pair<int, int>> out;
    for (const auto& [key, weight] : j.items())
        out.emplace_back(std::stoi(key), weight.get<int>());
    std::sort(out.begin(), out.end());
    for (const auto& [value, weight] : out) {
        (void)value;
        if (weight <= 0) throw std::invalid_argument("distribution weights must be positive");
    }
    if (out.empty()) throw std::invalid_argument("empty weight distribution");
    return out;
}

/// Bounded draw: uses modulo of the raw engine output so the sequence depends
/// only on the engine, not on a library distribution implementation.
inline std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

inline int sample_weighted(std::mt19937_64& rng, const std::vector<std::pair<int, int>>& weights) {
    std::uint64_t total = 0;
    for (const auto& [value, w] : weights) {
        (void)value;
        total += static_cast<std::uint64_t>(w);
    }
    std::uint64_t r = draw(rng, total);
    for (const auto& [value, w] : weights) {
        if (r < static_cast<std::uint64_t>(w)) return value;
        r -= static_cast<std::uint64_t>(w);
    }
    return weights.back().first;
}

}  // namespace detail

inline GrammarSpec parse_grammar_spec(const nlohmann::json& j) {
    GrammarSpec spec;
    for (const auto& [name, lj] : j.at("lexicon").items()) {
        GrammarSpec::LexEntry entry;
        entry.bio = lj.at("bio").get<std::string>();
        for (const auto& cj : lj.at("chunks")) {
            GrammarSpec::ChunkVariant variant;
            const nlohmann::json& toks = cj.is_object() ? cj.at("tokens") : cj;
            for (const auto& tj : toks) {
                GrammarSpec::TokenSpec tok;
                tok.form = tj.at(0).get<std::string>();
                tok.pos = tj.at(1).get<std::string>();
                if (tj.size() > 2)
                    for (const auto& [k, v] : tj.at(2).items()) tok.aux[k] = v.get<std::string>();
                variant.tokens.push_back(std::move(tok));
            }
            if (variant.tokens.empty())
                throw std::invalid_argument("lexicon entry '" + name + "' has an empty chunk");
            if (cj.is_object() && cj.contains("head")) {
                variant.head = cj.at("head").get<int>();
                if (variant.head < 0 || variant.head >= static_cast<int>(variant.tokens.size()))
                    throw std::invalid_argument("lexicon entry '" + name + "': head out of range");
            }
            entry.variants.push_back(std::move(variant));
        }
        if (entry.variants.empty())
            throw std::invalid_argument("lexicon entry '" + name + "' has no chunks");
        spec.lexicon.emplace(name, std::move(entry));
    }
    if (j.contains("modifierDistance"))
        spec.modifier_distance = detail::parse_weight_map(j.at("modifierDistance"));

    for (const auto& tj : j.at("templates")) {
        GrammarSpec::TemplateSpec tmpl;
        tmpl.name = tj.at("name").get<std::string>();
        tmpl.weight = tj.value("weight", 1);
        if (tmpl.weight <= 0) throw std::invalid_argument("template weight must be positive");
        std::map<std::string, std::string> slot_lex;
        for (const auto& sj : tj.at("slots")) {
            GrammarSpec::SlotSpec slot;
            slot.id = sj.value("id", "");
            slot.lex = sj.at("lex").get<std::string>();
            if (!spec.lexicon.count(slot.lex))
                throw std::invalid_argument("template '" + tmpl.name +
                                            "' references missing vocabulary '" + slot.lex + "'");
            if (sj.contains("repeat")) {
                slot.repeat = true;
                slot.offset = sj.value("offset", 0);
                const auto& rj = sj.at("repeat");
                if (rj.is_string()) {
                    if (rj.get<std::string>() != "modifierDistance")
                        throw std::invalid_argument("unknown named distribution '" +
                                                    rj.get<std::string>() + "'");
                    slot.named_distance = true;
                    if (spec.modifier_distance.empty())
                        throw std::invalid_argument("template '" + tmpl.name +
                                                    "' uses modifierDistance, which is not defined");
                    if (spec.modifier_distance.front().first < slot.offset)
                        throw std::invalid_argument(
                            "template '" + tmpl.name +
                            "': modifierDistance has entries below the slot offset");
                } else {
                    slot.weights = detail::parse_weight_map(rj);
                    if (slot.weights.front().first < slot.offset)
                        throw std::invalid_argument("template '" + tmpl.name +
                                                    "': repeat weights below the slot offset");
                }
                if (!slot.id.empty())
                    throw std::invalid_argument("repeat slots cannot carry an id");
            }
            if (!slot.id.empty()) {
                if (slot_lex.count(slot.id))
                    throw std::invalid_argument("duplicate slot id '" + slot.id + "'");
                slot_lex[slot.id] = slot.lex;
            }
            tmpl.slots.push_back(std::move(slot));
        }
        for (const auto& gj : tj.at("grs")) {
            GrammarSpec::GrSpec gr;
            gr.src = gj.at("src").get<std::string>();
            gr.tgt = gj.at("tgt").get<std::string>();
            auto label = gr_label_from_string(gj.at("label").get<std::string>());
            if (!label || *label == GrLabel::None)
                throw std::invalid_argument("template '" + tmpl.name + "': bad GR label");
            gr.label = *label;
            for (const std::string* slot_id : {&gr.src, &gr.tgt}) {
                auto it = slot_lex.find(*slot_id);
                if (it == slot_lex.end())
                    throw std::invalid_argument("template '" + tmpl.name +
                                                "': GR references unknown slot '" + *slot_id + "'");
                if (spec.lexicon.at(it->second).bio == "O")
                    throw std::invalid_argument("template '" + tmpl.name +
                                                "': GR endpoint on a stray slot");
            }
            if (spec.lexicon.at(slot_lex.at(gr.tgt)).bio != "VP")
                throw std::invalid_argument("template '" + tmpl.name +
                                            "': GR target slot is not a verb chunk");
            tmpl.grs.push_back(std::move(gr));
        }
        spec.templates.push_back(std::move(tmpl));
    }
    if (spec.templates.empty()) throw std::invalid_argument("grammar spec has no templates");
    return spec;
}

/// Generates `count` annotated sentences; byte-deterministic for a fixed
/// (spec, seed).
inline std::vector<Sentence> generate_sentences(const GrammarSpec& spec, std::uint64_t seed,
                                                int count) {
    std::mt19937_64 rng(seed);
    std::vector<std::pair<int, int>> template_weights;
    for (size_t i = 0; i < spec.templates.size(); ++i)
        template_weights.emplace_back(static_cast<int>(i), spec.templates[i].weight);

    std::vector<Sentence> corpus;
    corpus.reserve(static_cast<size_t>(count));
    for (int n = 0; n < count; ++n) {
        const auto& tmpl =
            spec.templates[static_cast<size_t>(detail::sample_weighted(rng, template_weights))];
        Sentence sent;
        std::map<std::string, int> chunk_of_slot;

        auto emit_chunk = [&](const GrammarSpec::LexEntry& lex) -> int {
            const auto& variant =
                lex.variants[detail::draw(rng, lex.variants.size())];
            int begin = static_cast<int>(sent.tokens.size());
            for (const auto& ts : variant.tokens) {
                Token tok;
                tok.index = static_cast<int>(sent.tokens.size());
                tok.form = ts.form;
                tok.pos = ts.pos;
                tok.aux = ts.aux;
                sent.tokens.push_back(std::move(tok));
            }
            if (lex.bio == "O") return -1;
            Chunk c;
            c.id = static_cast<int>(sent.chunks.size());
            c.bio_type = lex.bio;
            c.kind = chunk_kind_from_bio(lex.bio);
            c.span_begin = begin;
            c.span_end = static_cast<int>(sent.tokens.size()) - 1;
            c.head = variant.head >= 0 ? begin + variant.head : c.span_end;
            sent.chunks.push_back(c);
            return c.id;
        };

        for (const auto& slot : tmpl.slots) {
            const auto& lex = spec.lexicon.at(slot.lex);
            if (slot.repeat) {
                const auto& dist = slot.named_distance ? spec.modifier_distance : slot.weights;
                int distance = detail::sample_weighted(rng, dist);
                for (int k = 0; k < distance - slot.offset; ++k) emit_chunk(lex);
            } else {
                int id = emit_chunk(lex);
                if (!slot.id.empty()) chunk_of_slot[slot.id] = id;
            }
        }
        for (const auto& gr : tmpl.grs)
            sent.gold.push_back(
                GrInstance{chunk_of_slot.at(gr.src), chunk_of_slot.at(gr.tgt), gr.label});
        corpus.push_back(std::move(sent));
    }
    return corpus;
}

struct SynthOutput {
    std::string train_text;
    std::string test_text;
};

/// Generates a corpus and splits it into train/test by the configured
/// fraction (the first ceil(n * fraction) sentences are the training split).
inline SynthOutput generate(const GrammarSpec& spec, const SynthConfig& config) {
    if (config.sentences < 0) throw std::invalid_argument("negative sentence count");
    if (config.train_fraction <= 0.0 || config.train_fraction >= 1.0)
        throw std::invalid_argument("train fraction must lie in (0,1)");
    std::vector<Sentence> corpus = generate_sentences(spec, config.seed, config.sentences);
    auto train_n = static_cast<size_t>(
        std::min<long long>(config.sentences,
                            static_cast<long long>(config.sentences * config.train_fraction + 0.5)));
    std::vector<Sentence> train(corpus.begin(), corpus.begin() + static_cast<long>(train_n));
    std::vector<Sentence> test(corpus.begin() + static_cast<long>(train_n), corpus.end());
    return SynthOutput{serialize_corpus(train), serialize_corpus(test)};
}

}  // namespace grf
