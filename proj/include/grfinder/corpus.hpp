#pragma once

// Chunked-sentence data model and the column corpus format.
//
// A corpus file holds one token per line:
//   INDEX FORM POS BIOTAG [H|_] [attrs|_]
// followed by zero or more "#GR <src-head-token> <tgt-head-token> <label>"
// lines per sentence; sentences are separated by a blank line.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace grf {

/// Parse failure with the 1-based line it occurred on.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

enum class ChunkKind { Noun, Verb, Prep, Adv, Adj, Stray, Other };

inline const char* to_string(ChunkKind k) {
    switch (k) {
        case ChunkKind::Noun: return "noun";
        case ChunkKind::Verb: return "verb";
        case ChunkKind::Prep: return "prep";
        case ChunkKind::Adv: return "adv";
        case ChunkKind::Adj: return "adj";
        case ChunkKind::Stray: return "stray";
        case ChunkKind::Other: return "other";
    }
    return "other";
}

/// Maps a BIO chunk type ("NP", "VP", ...) onto the closed kind vocabulary.
/// Unknown types become Other.
inline ChunkKind chunk_kind_from_bio(std::string_view type) {
    if (type == "NP") return ChunkKind::Noun;
    if (type == "VP") return ChunkKind::Verb;
    if (type == "PP") return ChunkKind::Prep;
    if (type == "ADVP") return ChunkKind::Adv;
    if (type == "ADJP") return ChunkKind::Adj;
    return ChunkKind::Other;
}

// ---------------------------------------------------------------------------
// GR labels

enum class GrLabel {
    Subject,
    Object,
    IndirectObject,
    CopulaSubject,
    CopulaObject,
    ExpletiveSubject,
    TimeMod,
    LocationMod,
    OtherMod,
    LocationObject,
    PrepSubject,
    PrepObject,
    PrepIndirectObject,
    None,
};

inline constexpr int kGrLabelCount = 14;

inline const char* to_string(GrLabel l) {
    switch (l) {
        case GrLabel::Subject: return "subject";
        case GrLabel::Object: return "object";
        case GrLabel::IndirectObject: return "indirect-object";
        case GrLabel::CopulaSubject: return "copula-subject";
        case GrLabel::CopulaObject: return "copula-object";
        case GrLabel::ExpletiveSubject: return "expletive-subject";
        case GrLabel::TimeMod: return "time-mod";
        case GrLabel::LocationMod: return "location-mod";
        case GrLabel::OtherMod: return "other-mod";
        case GrLabel::LocationObject: return "location-object";
        case GrLabel::PrepSubject: return "prep-subject";
        case GrLabel::PrepObject: return "prep-object";
        case GrLabel::PrepIndirectObject: return "prep-indirect-object";
        case GrLabel::None: return "none";
    }
    return "none";
}

inline std::optional<GrLabel> gr_label_from_string(std::string_view s) {
    for (int i = 0; i < kGrLabelCount; ++i) {
        auto l = static_cast<GrLabel>(i);
        if (s == to_string(l)) return l;
    }
    return std::nullopt;
}

/// The three relation subtypes plus None for the absent label.
enum class GrSubtype { SimpleArg, Modifier, MessyArg, None };

inline const char* to_string(GrSubtype s) {
    switch (s) {
        case GrSubtype::SimpleArg: return "simple-arg";
        case GrSubtype::Modifier: return "modifier";
        case GrSubtype::MessyArg: return "messy-arg";
        case GrSubtype::None: return "none";
    }
    return "none";
}

/// Total, fixed mapping from label to subtype.
inline GrSubtype subtype_of(GrLabel l) {
    switch (l) {
        case GrLabel::Subject:
        case GrLabel::Object:
        case GrLabel::IndirectObject:
        case GrLabel::CopulaSubject:
        case GrLabel::CopulaObject:
        case GrLabel::ExpletiveSubject:
            return GrSubtype::SimpleArg;
        case GrLabel::TimeMod:
        case GrLabel::LocationMod:
        case GrLabel::OtherMod:
            return GrSubtype::Modifier;
        case GrLabel::LocationObject:
        case GrLabel::PrepSubject:
        case GrLabel::PrepObject:
        case GrLabel::PrepIndirectObject:
            return GrSubtype::MessyArg;
        case GrLabel::None:
            return GrSubtype::None;
    }
    return GrSubtype::None;
}

// ---------------------------------------------------------------------------
// Sentence structure

struct Token {
    int index = 0;
    std::string form;
    std::string pos;
    std::map<std::string, std::string> aux;  // open attribute-family registry

    bool operator==(const Token&) const = default;
};

struct Chunk {
    int id = 0;
    ChunkKind kind = ChunkKind::Other;
    std::string bio_type;  // original BIO type string ("NP", ...); empty for strays
    int span_begin = 0;
    int span_end = 0;  // inclusive
    int head = 0;      // token index, inside the span
    std::vector<std::string> left_stray;   // forms absorbed on the left side
    std::vector<std::string> right_stray;  // forms absorbed on the right side

    bool operator==(const Chunk&) const = default;
};

struct GrInstance {
    int source_chunk = 0;
    int target_chunk = 0;
    GrLabel label = GrLabel::None;

    bool operator==(const GrInstance&) const = default;
    auto operator<=>(const GrInstance&) const = default;
};

enum class StrayPolicy { MbOneWordChunks, TrNeighborAttributes };

inline const char* to_string(StrayPolicy p) {
    return p == StrayPolicy::MbOneWordChunks ? "mb-one-word-chunks" : "tr-neighbor-attributes";
}

inline std::optional<StrayPolicy> stray_policy_from_string(std::string_view s) {
    if (s == "mb-one-word-chunks") return StrayPolicy::MbOneWordChunks;
    if (s == "tr-neighbor-attributes") return StrayPolicy::TrNeighborAttributes;
    return std::nullopt;
}

struct Sentence {
    std::vector<Token> tokens;
    std::vector<Chunk> chunks;
    std::vector<GrInstance> gold;
    std::optional<StrayPolicy> normalized;  // set once normalize_strays has run

    /// Chunk covering a token, if any.
    std::optional<int> chunk_at_token(int token_index) const {
        for (const Chunk& c : chunks)
            if (c.span_begin <= token_index && token_index <= c.span_end) return c.id;
        return std::nullopt;
    }

    /// Chunk whose headword is the given token, if any.
    std::optional<int> chunk_of_head(int token_index) const {
        for (const Chunk& c : chunks)
            if (c.head == token_index) return c.id;
        return std::nullopt;
    }
};

/// The headword token of a chunk.
inline const Token& headword(const Chunk& chunk, const Sentence& sentence) {
    return sentence.tokens.at(static_cast<size_t>(chunk.head));
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline int parse_int(const std::string& s, int line, const char* what) {
    try {
        size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, std::string("expected integer ") + what + ", got '" + s + "'");
    }
}

struct PendingGr {
    int line;
    int src_token;
    int tgt_token;
    GrLabel label;
};

inline void finish_sentence(Sentence& sent, std::vector<PendingGr>& pending,
                            std::vector<Sentence>& out) {
    for (const PendingGr& g : pending) {
        auto src = sent.chunk_of_head(g.src_token);
        auto tgt = sent.chunk_of_head(g.tgt_token);
        if (!src)
            throw ParseError(g.line, "annotation error: token " + std::to_string(g.src_token) +
                                         " is not a chunk head");
        if (!tgt)
            throw ParseError(g.line, "annotation error: token " + std::to_string(g.tgt_token) +
                                         " is not a chunk head");
        if (*src == *tgt) throw ParseError(g.line, "annotation error: source equals target");
        sent.gold.push_back(GrInstance{*src, *tgt, g.label});
    }
    out.push_back(std::move(sent));
    sent = Sentence{};
    pending.clear();
}

}  // namespace detail

/// Parses the column corpus format. Deterministic; throws ParseError with the
/// offending line number.
inline std::vector<Sentence> parse_corpus(std::string_view text) {
    std::vector<Sentence> out;
    Sentence sent;
    std::vector<detail::PendingGr> pending;
    int open_chunk = -1;  // index into sent.chunks while its span may still grow
    std::map<int, int> explicit_heads;  // chunk index -> token index

    auto close_open = [&] { open_chunk = -1; };
    auto finish = [&] {
        if (sent.tokens.empty() && pending.empty()) return;
        for (auto& [ci, tok] : explicit_heads) sent.chunks[static_cast<size_t>(ci)].head = tok;
        explicit_heads.clear();
        detail::finish_sentence(sent, pending, out);
        close_open();
    };

    int line_no = 0;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        std::string line(text.substr(start, end == std::string_view::npos ? std::string_view::npos
                                                                          : end - start));
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        if (line.find_first_not_of(" \t") == std::string::npos) {
            finish();
            continue;
        }
        if (line.rfind("#GR", 0) == 0 && (line.size() == 3 || line[3] == ' ' || line[3] == '\t')) {
            auto cols = detail::split_ws(line);
            if (cols.size() != 4)
                throw ParseError(line_no, "malformed #GR line: expected '#GR SRC TGT LABEL'");
            int src = detail::parse_int(cols[1], line_no, "source head token");
            int tgt = detail::parse_int(cols[2], line_no, "target head token");
            auto label = gr_label_from_string(cols[3]);
            if (!label || *label == GrLabel::None)
                throw ParseError(line_no, "unknown GR label '" + cols[3] + "'");
            pending.push_back(detail::PendingGr{line_no, src, tgt, *label});
            continue;
        }
        if (line[0] == '#') throw ParseError(line_no, "unknown directive: " + line);

        auto cols = detail::split_ws(line);
        if (cols.size() < 4 || cols.size() > 6)
            throw ParseError(line_no, "malformed token line: expected 4-6 columns, got " +
                                          std::to_string(cols.size()));
        int index = detail::parse_int(cols[0], line_no, "token index");
        if (index != static_cast<int>(sent.tokens.size()))
            throw ParseError(line_no, "non-contiguous token index " + std::to_string(index) +
                                          " (expected " + std::to_string(sent.tokens.size()) + ")");
        Token tok;
        tok.index = index;
        tok.form = cols[1];
        tok.pos = cols[2];
        if (cols.size() >= 6 && cols[5] != "_") {
            // comma-separated key=value pairs
            std::string attrs = cols[5];
            size_t p = 0;
            while (p < attrs.size()) {
                size_t q = attrs.find(',', p);
                std::string pair = attrs.substr(p, q == std::string::npos ? std::string::npos : q - p);
                size_t eq = pair.find('=');
                if (eq == std::string::npos || eq == 0)
                    throw ParseError(line_no, "malformed attribute '" + pair + "'");
                tok.aux[pair.substr(0, eq)] = pair.substr(eq + 1);
                p = q == std::string::npos ? attrs.size() : q + 1;
            }
        }

        const std::string& bio = cols[3];
        if (bio == "O") {
            close_open();
        } else if (bio.size() > 2 && (bio[0] == 'B' || bio[0] == 'I') && bio[1] == '-') {
            std::string type = bio.substr(2);
            bool cont = bio[0] == 'I' && open_chunk >= 0 &&
                        sent.chunks[static_cast<size_t>(open_chunk)].bio_type == type &&
                        sent.chunks[static_cast<size_t>(open_chunk)].span_end == index - 1;
            if (cont) {
                sent.chunks[static_cast<size_t>(open_chunk)].span_end = index;
            } else {
                Chunk c;
                c.id = static_cast<int>(sent.chunks.size());
                c.bio_type = type;
                c.kind = chunk_kind_from_bio(type);
                c.span_begin = c.span_end = index;
                sent.chunks.push_back(c);
                open_chunk = c.id;
            }
        } else {
            throw ParseError(line_no, "malformed BIO tag '" + bio + "'");
        }

        if (cols.size() >= 5 && cols[4] != "_") {
            if (cols[4] != "H") throw ParseError(line_no, "expected head marker 'H' or '_'");
            if (bio == "O") throw ParseError(line_no, "head marker on token outside any chunk");
            explicit_heads[open_chunk] = index;
        }

        // default head: last token of the chunk
        if (open_chunk >= 0 && !explicit_heads.count(open_chunk))
            sent.chunks[static_cast<size_t>(open_chunk)].head = index;
        sent.tokens.push_back(std::move(tok));
    }
    finish();
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline std::string default_bio_type(ChunkKind k) {
    switch (k) {
        case ChunkKind::Noun: return "NP";
        case ChunkKind::Verb: return "VP";
        case ChunkKind::Prep: return "PP";
        case ChunkKind::Adv: return "ADVP";
        case ChunkKind::Adj: return "ADJP";
        default: return "X";
    }
}

}  // namespace detail

/// Canonical text form: single spaces, H only when the head is not the last
/// token, '_' placeholders for empty columns.
inline std::string serialize_corpus(const std::vector<Sentence>& corpus) {
    std::string out;
    for (const Sentence& s : corpus) {
        for (const Token& t : s.tokens) {
            const Chunk* covering = nullptr;
            for (const Chunk& c : s.chunks)
                if (c.kind != ChunkKind::Stray && c.span_begin <= t.index && t.index <= c.span_end) {
                    covering = &c;
                    break;
                }
            std::string bio = "O";
            std::string headmark = "_";
            if (covering) {
                std::string type =
                    covering->bio_type.empty() ? detail::default_bio_type(covering->kind)
                                               : covering->bio_type;
                bio = (t.index == covering->span_begin ? "B-" : "I-") + type;
                if (covering->head == t.index && covering->head != covering->span_end) headmark = "H";
            }
            std::string attrs;
            for (const auto& [k, v] : t.aux) {
                if (!attrs.empty()) attrs += ',';
                attrs += k + '=' + v;
            }
            if (attrs.empty()) attrs = "_";
            out += std::to_string(t.index) + ' ' + t.form + ' ' + t.pos + ' ' + bio + ' ' +
                   headmark + ' ' + attrs + '\n';
        }
        for (const GrInstance& g : s.gold) {
            out += "#GR " + std::to_string(s.chunks[static_cast<size_t>(g.source_chunk)].head) +
                   ' ' + std::to_string(s.chunks[static_cast<size_t>(g.target_chunk)].head) + ' ' +
                   to_string(g.label) + '\n';
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stray normalization

/// Applies a stray-lexeme policy. Idempotent per policy; re-normalizing under
/// a different policy is rejected.
inline Sentence normalize_strays(const Sentence& sentence, StrayPolicy policy) {
    if (sentence.normalized) {
        if (*sentence.normalized != policy)
            throw std::invalid_argument("sentence already normalized under a different policy");
        return sentence;
    }
    Sentence out = sentence;
    out.normalized = policy;

    std::vector<int> unchunked;
    for (const Token& t : sentence.tokens)
        if (!sentence.chunk_at_token(t.index)) unchunked.push_back(t.index);
    if (unchunked.empty()) return out;

    if (policy == StrayPolicy::MbOneWordChunks) {
        std::vector<Chunk> merged;
        std::map<int, int> remap;  // old chunk id -> new id
        size_t next_old = 0;
        auto push_old = [&] {
            Chunk c = sentence.chunks[next_old];
            remap[c.id] = static_cast<int>(merged.size());
            c.id = static_cast<int>(merged.size());
            merged.push_back(std::move(c));
            ++next_old;
        };
        for (int tok : unchunked) {
            while (next_old < sentence.chunks.size() && sentence.chunks[next_old].span_begin < tok)
                push_old();
            Chunk stray;
            stray.id = static_cast<int>(merged.size());
            stray.kind = ChunkKind::Stray;
            stray.span_begin = stray.span_end = stray.head = tok;
            merged.push_back(std::move(stray));
        }
        while (next_old < sentence.chunks.size()) push_old();
        out.chunks = std::move(merged);
        out.gold.clear();
        for (const GrInstance& g : sentence.gold)
            out.gold.push_back(GrInstance{remap.at(g.source_chunk), remap.at(g.target_chunk), g.label});
    } else {
        for (int tok : unchunked) {
            const std::string& form = sentence.tokens[static_cast<size_t>(tok)].form;
            Chunk* left = nullptr;
            Chunk* right = nullptr;
            for (Chunk& c : out.chunks) {
                if (c.span_end < tok) left = &c;
                if (c.span_begin > tok && !right) right = &c;
            }
            if (left) left->right_stray.push_back(form);
            if (right) right->left_stray.push_back(form);
        }
    }
    return out;
}

}  // namespace grf
