#pragma once
// ROCStories loading, tokenization, vocabulary and per-token features.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "demn/tensor.hpp"

namespace demn::data {

/// Token placed between the three exposition sentences.
inline constexpr std::string_view kSentenceMarker = "<s>";

struct LabeledStory {
    std::string story_id;
    std::vector<std::string> exposition;  // sentences 1-3 joined by kSentenceMarker
    std::vector<std::string> climax;      // sentence 4
    std::vector<std::string> ending1;
    std::vector<std::string> ending2;
    int label = 0;  // 1 or 2; 0 only when loaded without labels

    const std::vector<std::string>& ending(int k) const { return k == 1 ? ending1 : ending2; }
};

struct LoadReport {
    std::vector<LabeledStory> stories;
    std::size_t skipped_empty = 0;  // rows dropped for an empty sentence
};

/// Column names of the public corpus layout, matched case-insensitively.
struct RocColumns {
    static constexpr std::string_view id = "InputStoryid";
    static constexpr std::array<std::string_view, 4> sentences = {"InputSentence1", "InputSentence2",
                                                                  "InputSentence3", "InputSentence4"};
    static constexpr std::string_view ending1 = "RandomFifthSentenceQuiz1";
    static constexpr std::string_view ending2 = "RandomFifthSentenceQuiz2";
    static constexpr std::string_view answer = "AnswerRightEnding";
};

LoadReport load_rocstories(const std::filesystem::path& path, bool has_labels = true);
LoadReport parse_rocstories(std::istream& in, bool has_labels = true);
/// Writes stories in the same layout load_rocstories reads; tokens are joined
/// with single spaces.
void write_rocstories(std::ostream& out, const std::vector<LabeledStory>& stories);
void write_rocstories(const std::filesystem::path& path, const std::vector<LabeledStory>& stories);

/// RFC 4180 record splitter (quoted fields, doubled quotes, embedded newlines).
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

/// Lowercases, splits on whitespace and emits every ASCII punctuation
/// character as its own token.
std::vector<std::string> tokenize(std::string_view text);

struct Vocab {
    std::vector<std::string> tokens;  // index → token; index 0 is padding
    std::unordered_map<std::string, std::size_t> index;
    Tensor embeddings;                       // size × d_w, row 0 all zeros
    std::vector<std::uint8_t> frozen;        // per row; pretrained rows and padding are frozen
    std::optional<std::size_t> unk;          // OOV bucket, when built with one

    std::size_t size() const { return tokens.size(); }
    std::size_t dim() const { return embeddings.cols(); }
    std::size_t pretrained_count() const;
    /// Index of a token; falls back to the OOV bucket or throws UnknownToken.
    std::size_t lookup(const std::string& token) const;
};

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

struct VocabOptions {
    std::size_t d_w = 50;
    std::optional<std::filesystem::path> embeddings;
    bool oov_bucket = false;
    std::uint64_t seed = 0;
    double init_range = 0.05;
};

/// Indexes every corpus token in first-occurrence order. Tokens present in the
/// embedding file take its vector and are frozen; the rest (and the OOV
/// bucket) are drawn uniformly from ±init_range.
Vocab build_vocab(const std::vector<LabeledStory>& stories, const VocabOptions& options);
/// Vocabulary from an explicit token list (checkpoint reload).
Vocab vocab_from_tokens(std::vector<std::string> tokens, Tensor embeddings, std::vector<std::uint8_t> frozen);

/// Reads "token v1 … vd" lines, keeping only tokens in `wanted`. Throws
/// EmbeddingDimMismatch when a row width differs from d_w.
std::unordered_map<std::string, std::vector<double>> read_embeddings(
    const std::filesystem::path& path, std::size_t d_w,
    const std::unordered_map<std::string, std::size_t>& wanted);
/// Width of the first row of an embedding file.
std::size_t embedding_file_dim(const std::filesystem::path& path);

/// Sequence order used by annotations and featurized stories.
enum class Segment : std::size_t { exposition = 0, climax = 1, ending1 = 2, ending2 = 3 };
inline constexpr std::size_t kSegments = 4;

/// Token-aligned tag ids from an external tagger, one array per segment.
struct Annotation {
    std::string story_id;
    std::array<std::vector<std::size_t>, kSegments> pos, ner, rel;
};
using AnnotationIndex = std::unordered_map<std::string, Annotation>;

/// JSON-lines sidecar: {"story_id": ..., "pos": [[...] x4], "ner": ..., "rel": ...}.
/// Missing keys default to empty (all-zero ids).
AnnotationIndex load_annotations(const std::filesystem::path& path);
Annotation parse_annotation(std::string_view json_line);

struct TagTableSizes {
    std::size_t pos = 64;
    std::size_t ner = 32;
    std::size_t rel = 48;
};

struct SequenceFeatures {
    std::vector<std::size_t> token_ids;
    std::vector<std::size_t> pos, ner, rel;
    std::vector<double> tf;
    std::vector<double> exact_match;

    std::size_t length() const { return token_ids.size(); }
};

struct FeaturizedStory {
    std::string story_id;
    std::array<SequenceFeatures, kSegments> segments;
    int label = 0;

    const SequenceFeatures& exposition() const { return segments[0]; }
    const SequenceFeatures& climax() const { return segments[1]; }
    const SequenceFeatures& ending(int k) const { return segments[k == 1 ? 2 : 3]; }
};

/// TF is count/total over all four segments. An ending token exact-matches
/// when it appears in exposition ∪ climax; a plot token exact-matches when it
/// appears in either ending. Sentence markers never match.
FeaturizedStory featurize(const LabeledStory& story, const Vocab& vocab, const Annotation* annotation = nullptr,
                          const TagTableSizes& tables = {});

/// Planted corpus: the correct ending repeats the exposition's topic token
/// and the climax's trigger token; the wrong ending carries a different topic
/// and trigger that never occur in its own plot.
std::vector<LabeledStory> gen_synthetic(std::size_t n, std::size_t vocab_size, std::uint64_t seed);

}  // namespace demn::data
