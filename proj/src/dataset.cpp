#include "demn/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "demn/error.hpp"
#include "demn/rng.hpp"

namespace demn::data {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                field_started = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (field_started || !field.empty() || !record.empty()) {
                    record.push_back(std::move(field));
                    records.push_back(std::move(record));
                }
                field.clear();
                record.clear();
                field_started = false;
                break;
            default:
                field += c;
                field_started = true;
        }
    }
    if (quoted) throw Error(ErrorKind::bad_format, "unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.push_back(lower(current));
        current.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (is_ascii_punct(c)) {
            flush();
            tokens.emplace_back(1, c);
        } else {
            current += c;
        }
    }
    flush();
    return tokens;
}

LoadReport parse_rocstories(std::istream& in, bool has_labels) {
    const auto records = parse_csv(in);
    if (records.empty()) throw Error(ErrorKind::missing_column, "empty file, no header row");

    const auto& header = records.front();
    auto column = [&](std::string_view name) -> std::size_t {
        const std::string want = lower(name);
        for (std::size_t i = 0; i < header.size(); ++i)
            if (lower(trim(header[i])) == want) return i;
        throw Error(ErrorKind::missing_column, std::string(name));
    };
    const std::size_t id_col = column(RocColumns::id);
    std::array<std::size_t, 4> sent_cols{};
    for (std::size_t s = 0; s < 4; ++s) sent_cols[s] = column(RocColumns::sentences[s]);
    const std::size_t e1_col = column(RocColumns::ending1);
    const std::size_t e2_col = column(RocColumns::ending2);
    const std::size_t ans_col = has_labels ? column(RocColumns::answer) : 0;

    LoadReport report;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        auto cell = [&](std::size_t c) -> const std::string& {
            if (c >= row.size())
                throw Error(ErrorKind::bad_format, "row " + std::to_string(r + 1) + " has too few fields");
            return row[c];
        };

        LabeledStory story;
        story.story_id = trim(cell(id_col));
        std::array<std::vector<std::string>, 4> sentences;
        bool empty = false;
        for (std::size_t s = 0; s < 4; ++s) {
            sentences[s] = tokenize(cell(sent_cols[s]));
            empty |= sentences[s].empty();
        }
        story.ending1 = tokenize(cell(e1_col));
        story.ending2 = tokenize(cell(e2_col));
        empty |= story.ending1.empty() || story.ending2.empty();
        if (empty) {
            ++report.skipped_empty;
            continue;
        }
        for (std::size_t s = 0; s < 3; ++s) {
            if (s > 0) story.exposition.emplace_back(kSentenceMarker);
            story.exposition.insert(story.exposition.end(), sentences[s].begin(), sentences[s].end());
        }
        story.climax = std::move(sentences[3]);

        if (has_labels) {
            const std::string answer = trim(cell(ans_col));
            if (answer == "1") {
                story.label = 1;
            } else if (answer == "2") {
                story.label = 2;
            } else {
                throw Error(ErrorKind::bad_label, "story " + story.story_id + " has answer '" + answer + "'");
            }
        }
        report.stories.push_back(std::move(story));
    }
    return report;
}

LoadReport load_rocstories(const std::filesystem::path& path, bool has_labels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    return parse_rocstories(in, has_labels);
}

void write_rocstories(std::ostream& out, const std::vector<LabeledStory>& stories) {
    out << RocColumns::id;
    for (auto s : RocColumns::sentences) out << ',' << s;
    out << ',' << RocColumns::ending1 << ',' << RocColumns::ending2 << ',' << RocColumns::answer << '\n';
    for (const auto& story : stories) {
        std::vector<std::string> sentences;
        std::size_t begin = 0;
        for (std::size_t i = 0; i <= story.exposition.size(); ++i) {
            if (i == story.exposition.size() || story.exposition[i] == kSentenceMarker) {
                sentences.push_back(join(story.exposition, begin, i));
                begin = i + 1;
            }
        }
        if (sentences.size() != 3)
            throw Error(ErrorKind::bad_format, "story " + story.story_id + " exposition is not three sentences");
        out << csv_field(story.story_id);
        for (const auto& s : sentences) out << ',' << csv_field(s);
        out << ',' << csv_field(join(story.climax, 0, story.climax.size()));
        out << ',' << csv_field(join(story.ending1, 0, story.ending1.size()));
        out << ',' << csv_field(join(story.ending2, 0, story.ending2.size()));
        out << ',' << story.label << '\n';
    }
}

void write_rocstories(const std::filesystem::path& path, const std::vector<LabeledStory>& stories) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    write_rocstories(out, stories);
}

std::size_t Vocab::pretrained_count() const {
    std::size_t n = 0;
    for (std::size_t i = 1; i < frozen.size(); ++i) n += frozen[i] != 0 && (!unk || i != *unk);
    return n;
}

std::size_t Vocab::lookup(const std::string& token) const {
    if (auto it = index.find(token); it != index.end()) return it->second;
    if (unk) return *unk;
    throw Error(ErrorKind::unknown_token, "'" + token + "' is not in the vocabulary");
}

std::size_t embedding_file_dim(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        if (!(ss >> tok)) continue;
        std::size_t n = 0;
        while (ss >> tok) ++n;
        return n;
    }
    throw Error(ErrorKind::bad_format, "embedding file " + path.string() + " is empty");
}

std::unordered_map<std::string, std::vector<double>> read_embeddings(
    const std::filesystem::path& path, std::size_t d_w,
    const std::unordered_map<std::string, std::size_t>& wanted) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::unordered_map<std::string, std::vector<double>> found;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        ++line_no;
        fields.clear();
        std::istringstream ss(line);
        for (std::string f; ss >> f;) fields.push_back(std::move(f));
        if (fields.empty()) continue;
        if (fields.size() - 1 != d_w)
            throw Error(ErrorKind::embedding_dim_mismatch, path.string() + ":" + std::to_string(line_no) + " has " +
                                                               std::to_string(fields.size() - 1) +
                                                               " values, expected " + std::to_string(d_w));
        if (!wanted.contains(fields[0]) || found.contains(fields[0])) continue;
        std::vector<double> v(d_w);
        for (std::size_t j = 0; j < d_w; ++j) {
            const std::string& f = fields[j + 1];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v[j]);
            if (ec != std::errc() || ptr != f.data() + f.size())
                throw Error(ErrorKind::bad_format, path.string() + ":" + std::to_string(line_no) + " bad number");
        }
        found.emplace(fields[0], std::move(v));
    }
    return found;
}

Vocab build_vocab(const std::vector<LabeledStory>& stories, const VocabOptions& options) {
    if (stories.empty()) throw Error(ErrorKind::invalid_argument, "build_vocab needs at least one story");
    if (options.d_w == 0) throw Error(ErrorKind::invalid_argument, "d_w must be positive");

    Vocab v;
    auto add = [&](const std::string& tok) {
        if (v.index.emplace(tok, v.tokens.size()).second) v.tokens.push_back(tok);
    };
    add(std::string(kPadToken));
    if (options.oov_bucket) {
        add(std::string(kUnkToken));
        v.unk = 1;
    }
    for (const auto& s : stories)
        for (const auto* seq : {&s.exposition, &s.climax, &s.ending1, &s.ending2})
            for (const auto& tok : *seq) add(tok);

    std::unordered_map<std::string, std::vector<double>> pretrained;
    if (options.embeddings) pretrained = read_embeddings(*options.embeddings, options.d_w, v.index);

    v.embeddings = Tensor(v.size(), options.d_w);
    v.frozen.assign(v.size(), 0);
    v.frozen[0] = 1;
    Rng rng(options.seed);
    for (std::size_t i = 1; i < v.size(); ++i) {
        auto row = v.embeddings.row(i);
        if (auto it = pretrained.find(v.tokens[i]); it != pretrained.end() && !(v.unk && i == *v.unk)) {
            std::copy(it->second.begin(), it->second.end(), row.begin());
            v.frozen[i] = 1;
        } else {
            for (double& x : row) x = rng.uniform(-options.init_range, options.init_range);
        }
    }
    return v;
}

Vocab vocab_from_tokens(std::vector<std::string> tokens, Tensor embeddings, std::vector<std::uint8_t> frozen) {
    if (embeddings.rows() != tokens.size() || frozen.size() != tokens.size())
        throw Error(ErrorKind::dimension_mismatch, "vocabulary and embedding table disagree");
    Vocab v;
    v.tokens = std::move(tokens);
    for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index.emplace(v.tokens[i], i);
    if (auto it = v.index.find(std::string(kUnkToken)); it != v.index.end()) v.unk = it->second;
    v.embeddings = std::move(embeddings);
    v.frozen = std::move(frozen);
    return v;
}

Annotation parse_annotation(std::string_view json_line) {
    Annotation a;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_line);
        a.story_id = j.at("story_id").get<std::string>();
        for (const char* key : {"pos", "ner", "rel"}) {
            auto& target = std::string_view(key) == "pos" ? a.pos : std::string_view(key) == "ner" ? a.ner : a.rel;
            if (!j.contains(key)) continue;
            const auto& seqs = j.at(key);
            if (!seqs.is_array() || seqs.size() != kSegments)
                throw Error(ErrorKind::sidecar_length_mismatch,
                            "story " + a.story_id + ": '" + key + "' must hold 4 sequences");
            for (std::size_t s = 0; s < kSegments; ++s) target[s] = seqs[s].get<std::vector<std::size_t>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::bad_format, std::string("annotation line: ") + e.what());
    }
    return a;
}

AnnotationIndex load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    AnnotationIndex index;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        Annotation a = parse_annotation(line);
        std::string id = a.story_id;
        index.insert_or_assign(std::move(id), std::move(a));
    }
    return index;
}

FeaturizedStory featurize(const LabeledStory& story, const Vocab& vocab, const Annotation* annotation,
                          const TagTableSizes& tables) {
    const std::array<const std::vector<std::string>*, kSegments> seqs = {&story.exposition, &story.climax,
                                                                         &story.ending1, &story.ending2};
    std::unordered_map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto* seq : seqs)
        for (const auto& t : *seq) {
            ++counts[t];
            ++total;
        }

    std::unordered_set<std::string> plot_set(story.exposition.begin(), story.exposition.end());
    plot_set.insert(story.climax.begin(), story.climax.end());
    std::unordered_set<std::string> ending_set(story.ending1.begin(), story.ending1.end());
    ending_set.insert(story.ending2.begin(), story.ending2.end());

    FeaturizedStory out;
    out.story_id = story.story_id;
    out.label = story.label;
    for (std::size_t s = 0; s < kSegments; ++s) {
        const auto& tokens = *seqs[s];
        const std::size_t n = tokens.size();
        SequenceFeatures& f = out.segments[s];
        const auto& other = s < 2 ? ending_set : plot_set;
        for (const auto& t : tokens) {
            f.token_ids.push_back(vocab.lookup(t));
            f.tf.push_back(static_cast<double>(counts[t]) / static_cast<double>(total));
            f.exact_match.push_back(t != kSentenceMarker && other.contains(t) ? 1.0 : 0.0);
        }
        auto tags = [&](const std::array<std::vector<std::size_t>, kSegments>* src, std::size_t limit,
                        const char* what) {
            if (src == nullptr || (*src)[s].empty()) return std::vector<std::size_t>(n, 0);
            const auto& ids = (*src)[s];
            if (ids.size() != n)
                throw Error(ErrorKind::sidecar_length_mismatch,
                            "story " + story.story_id + " segment " + std::to_string(s) + ": " + what + " has " +
                                std::to_string(ids.size()) + " ids for " + std::to_string(n) + " tokens");
            for (std::size_t id : ids)
                if (id >= limit)
                    throw Error(ErrorKind::tag_out_of_range, std::string(what) + " id " + std::to_string(id) +
                                                                 " exceeds table size " + std::to_string(limit));
            return ids;
        };
        f.pos = tags(annotation ? &annotation->pos : nullptr, tables.pos, "pos");
        f.ner = tags(annotation ? &annotation->ner : nullptr, tables.ner, "ner");
        f.rel = tags(annotation ? &annotation->rel : nullptr, tables.rel, "rel");
    }
    return out;
}

std::vector<LabeledStory> gen_synthetic(std::size_t n, std::size_t vocab_size, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorKind::invalid_argument, "synthetic corpus needs n >= 1");
    if (vocab_size < 4) throw Error(ErrorKind::invalid_argument, "synthetic vocab_size must be >= 4");
    constexpr std::size_t kTopics = 12;
    constexpr std::size_t kTriggers = 12;

    Rng rng(seed);
    auto filler = [&](const char* prefix) { return prefix + std::to_string(rng.below(vocab_size)); };
    auto sentence = [&](const char* prefix, std::size_t lo, std::size_t hi) {
        std::vector<std::string> s;
        const std::size_t len = lo + rng.below(hi - lo + 1);
        for (std::size_t i = 0; i < len; ++i) s.push_back(filler(prefix));
        return s;
    };
    auto insert_at_random = [&](std::vector<std::string>& s, std::string tok) {
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(rng.below(s.size() + 1)), std::move(tok));
    };
    auto other_than = [&](std::size_t pool, std::size_t avoid) {
        std::size_t x = rng.below(pool - 1);
        return x >= avoid ? x + 1 : x;
    };

    std::vector<LabeledStory> stories;
    stories.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        LabeledStory s;
        s.story_id = "syn-" + std::to_string(seed) + "-" + std::to_string(k);
        const std::size_t topic = rng.below(kTopics);
        const std::size_t trigger = rng.below(kTriggers);
        const std::size_t topic_slot = rng.below(3);
        for (std::size_t i = 0; i < 3; ++i) {
            auto sent = sentence("w", 3, 5);
            if (i == topic_slot) insert_at_random(sent, "topic" + std::to_string(topic));
            sent.emplace_back(".");
            if (i > 0) s.exposition.emplace_back(kSentenceMarker);
            s.exposition.insert(s.exposition.end(), sent.begin(), sent.end());
        }
        s.climax = sentence("w", 2, 4);
        insert_at_random(s.climax, "trig" + std::to_string(trigger));
        s.climax.emplace_back(".");

        auto ending = [&](std::size_t t, std::size_t r) {
            auto e = sentence("v", 2, 3);
            insert_at_random(e, "topic" + std::to_string(t));
            insert_at_random(e, "trig" + std::to_string(r));
            e.emplace_back(".");
            return e;
        };
        auto right = ending(topic, trigger);
        auto wrong = ending(other_than(kTopics, topic), other_than(kTriggers, trigger));
        s.label = rng.bernoulli(0.5) ? 1 : 2;
        s.ending1 = s.label == 1 ? right : wrong;
        s.ending2 = s.label == 1 ? wrong : right;
        stories.push_back(std::move(s));
    }
    return stories;
}

}  // namespace demn::data
