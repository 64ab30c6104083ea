#pragma once
// Shared helpers for the unit tests.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "demn/dataset.hpp"
#include "demn/model.hpp"
#include "demn/rng.hpp"
#include "demn/tensor.hpp"

namespace testutil {

inline demn::Tensor random_tensor(std::size_t rows, std::size_t cols, demn::Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
    demn::Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline double max_abs_diff(const demn::Tensor& a, const demn::Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Naive (m×k)·(k×n).
inline demn::Tensor naive_matmul(const demn::Tensor& a, const demn::Tensor& b) {
    demn::Tensor c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
            c(i, j) = static_cast<double>(s);
        }
    return c;
}

inline demn::Tensor naive_softmax_rows(const demn::Tensor& x) {
    demn::Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        long double mx = x(i, 0), z = 0;
        for (std::size_t j = 0; j < x.cols(); ++j) mx = std::max<long double>(mx, x(i, j));
        for (std::size_t j = 0; j < x.cols(); ++j) z += std::exp(static_cast<long double>(x(i, j)) - mx);
        for (std::size_t j = 0; j < x.cols(); ++j)
            out(i, j) = static_cast<double>(std::exp(static_cast<long double>(x(i, j)) - mx) / z);
    }
    return out;
}

inline demn::Tensor transpose(const demn::Tensor& a) {
    demn::Tensor t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline demn::Tensor row_permute(const demn::Tensor& a, const std::vector<std::size_t>& perm) {
    demn::Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(perm[i], j);
    return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("demn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

/// The worked example story: three exposition sentences, a climax and two endings.
inline demn::data::LabeledStory example_story() {
    using demn::data::tokenize;
    demn::data::LabeledStory s;
    s.story_id = "example";
    const char* expo[] = {"Tom was studying for the big test.", "He then fell asleep do to boredom.",
                          "He slept for five hours."};
    for (int i = 0; i < 3; ++i) {
        if (i) s.exposition.emplace_back(demn::data::kSentenceMarker);
        for (auto& t : tokenize(expo[i])) s.exposition.push_back(t);
    }
    s.climax = tokenize("He woke up shocked.");
    s.ending1 = tokenize("Tom felt prepared for the test.");
    s.ending2 = tokenize("Tom hurried to study as much as possible before the test.");
    s.label = 2;
    return s;
}

/// Small model config for fast structural tests.
inline demn::ModelConfig tiny_config(std::size_t hidden = 4, std::size_t mlp = 5) {
    demn::ModelConfig c;
    c.hidden = hidden;
    c.mlp_hidden = mlp;
    c.embedding.d_pos = 3;
    c.embedding.d_ner = 2;
    c.embedding.d_rel = 2;
    return c;
}

inline demn::data::Vocab small_vocab(const std::vector<demn::data::LabeledStory>& stories, std::size_t d_w = 6,
                                     std::uint64_t seed = 3) {
    demn::data::VocabOptions o;
    o.d_w = d_w;
    o.seed = seed;
    o.oov_bucket = true;
    return demn::data::build_vocab(stories, o);
}

}  // namespace testutil
