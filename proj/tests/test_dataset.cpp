#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "doctest.h"
#include "demn/dataset.hpp"
#include "demn/error.hpp"
#include "support.hpp"

using namespace demn;
using namespace demn::data;
using testutil::words;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected demn::Error");
    return ErrorKind::io;
}

const char* kHeader =
    "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,"
    "RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2,AnswerRightEnding\n";

LabeledStory story_of(std::string id, std::string expo, std::string climax, std::string e1, std::string e2,
                      int label) {
    return {std::move(id), words(expo), words(climax), words(e1), words(e2), label};
}

// Picks the ending sharing more tokens with the plot; ties go to ending 1.
int overlap_oracle(const LabeledStory& s) {
    std::unordered_set<std::string> plot(s.exposition.begin(), s.exposition.end());
    plot.insert(s.climax.begin(), s.climax.end());
    auto hits = [&](const std::vector<std::string>& e) {
        int n = 0;
        for (const auto& t : e) n += plot.contains(t);
        return n;
    };
    return hits(s.ending2) > hits(s.ending1) ? 2 : 1;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("tokenizer goldens") {
    CHECK(tokenize("He woke up shocked.") == std::vector<std::string>{"he", "woke", "up", "shocked", "."});
    CHECK(tokenize("").empty());
    CHECK(tokenize("   \t ").empty());
    CHECK(tokenize("didn't") == std::vector<std::string>{"didn", "'", "t"});
    CHECK(tokenize("Wait...what?!") == std::vector<std::string>{"wait", ".", ".", ".", "what", "?", "!"});
}

TEST_CASE("tokenizing joined tokens is idempotent") {
    for (const char* text : {"Tom hurried to study, as much as possible!", "\"Quoted\" (parens) - dash",
                             "MiXeD CaSe didn't can't"}) {
        const auto once = tokenize(text);
        std::string joined;
        for (const auto& t : once) joined += t + " ";
        CHECK(tokenize(joined) == once);
    }
}

TEST_CASE("csv records follow quoting rules") {
    std::istringstream in("\xEF\xBB\xBF" "a,b,c\n\"x, y\",\"say \"\"hi\"\"\",\"two\nlines\"\r\n1,,3");
    auto rows = parse_csv(in);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
    CHECK(rows[1] == std::vector<std::string>{"x, y", "say \"hi\"", "two\nlines"});
    CHECK(rows[2] == std::vector<std::string>{"1", "", "3"});
}

TEST_CASE("columns map to story parts") {
    std::istringstream in(std::string(kHeader) +
                          "id1,Tom was tired.,He sat.,He slept.,He woke up.,Tom smiled.,Tom cried.,1\n");
    auto rep = parse_rocstories(in);
    REQUIRE(rep.stories.size() == 1);
    const auto& s = rep.stories[0];
    CHECK(s.story_id == "id1");
    CHECK(s.exposition == words("tom was tired . <s> he sat . <s> he slept ."));
    CHECK(s.climax == words("he woke up ."));
    CHECK(s.ending1 == words("tom smiled ."));
    CHECK(s.ending2 == words("tom cried ."));
    CHECK(s.label == 1);
}

TEST_CASE("header matching ignores case") {
    std::string header = kHeader;
    for (auto& c : header) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::istringstream in(header + "id1,a.,b.,c.,d.,e.,f.,2\n");
    CHECK(parse_rocstories(in).stories.at(0).label == 2);
}

TEST_CASE("write then load reproduces token sequences") {
    auto stories = gen_synthetic(3, 20, 5);
    stories.push_back(story_of("q\"uote,d", "a , b <s> c <s> d", "e", "f \" g", "h", 1));
    std::stringstream buf;
    write_rocstories(buf, stories);
    auto back = parse_rocstories(buf).stories;
    REQUIRE(back.size() == stories.size());
    for (std::size_t i = 0; i < stories.size(); ++i) {
        CHECK(back[i].story_id == stories[i].story_id);
        CHECK(back[i].exposition == stories[i].exposition);
        CHECK(back[i].climax == stories[i].climax);
        CHECK(back[i].ending1 == stories[i].ending1);
        CHECK(back[i].ending2 == stories[i].ending2);
        CHECK(back[i].label == stories[i].label);
    }
}

TEST_CASE("loader errors") {
    std::istringstream no_answer(
        "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,"
        "RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2\nid,a,b,c,d,e,f\n");
    CHECK(kind_of([&] { parse_rocstories(no_answer); }) == ErrorKind::missing_column);

    std::istringstream unlabeled(
        "InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,"
        "RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2\nid,a,b,c,d,e,f\n");
    auto rep = parse_rocstories(unlabeled, false);
    REQUIRE(rep.stories.size() == 1);
    CHECK(rep.stories[0].label == 0);

    std::istringstream bad(std::string(kHeader) + "id,a,b,c,d,e,f,3\n");
    CHECK(kind_of([&] { parse_rocstories(bad); }) == ErrorKind::bad_label);

    std::istringstream empty(std::string(kHeader) + "id1,a,,c,d,e,f,1\nid2,a,b,c,d,e,f,2\nid3,a,b,c,d,e, ,2\n");
    auto r2 = parse_rocstories(empty);
    CHECK(r2.stories.size() == 1);
    CHECK(r2.skipped_empty == 2);

    CHECK(kind_of([] { load_rocstories("/nonexistent/demn.csv"); }) == ErrorKind::io);
}

TEST_CASE("vocabulary sizes and determinism") {
    std::vector<LabeledStory> stories = {story_of("s", "t0 t1 t2", "t3 t4", "t5 t6 t7", "t8 t9 t0", 1)};
    VocabOptions o;
    o.d_w = 4;
    o.seed = 12;
    Vocab v = build_vocab(stories, o);
    CHECK(v.size() == 11);
    CHECK(v.tokens[0] == kPadToken);
    CHECK(v.tokens[1] == "t0");
    for (std::size_t j = 0; j < v.dim(); ++j) CHECK(v.embeddings(0, j) == 0.0);
    CHECK(v.pretrained_count() == 0);
    CHECK(v.lookup("t9") == 10);
    CHECK(kind_of([&] { v.lookup("missing"); }) == ErrorKind::unknown_token);

    Vocab again = build_vocab(stories, o);
    CHECK(again.embeddings == v.embeddings);
    for (std::size_t i = 1; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.dim(); ++j) CHECK(std::abs(v.embeddings(i, j)) <= 0.05);

    o.oov_bucket = true;
    Vocab with_unk = build_vocab(stories, o);
    CHECK(with_unk.size() == 12);
    REQUIRE(with_unk.unk.has_value());
    CHECK(with_unk.lookup("missing") == *with_unk.unk);
}

TEST_CASE("pretrained rows are copied and frozen") {
    testutil::TempDir dir("emb");
    const auto path = dir / "vec.txt";
    {
        std::ofstream f(path);
        for (int i = 0; i < 6; ++i) f << "t" << i << " " << i << " " << -i << " 0.5\n";
        f << "unused 9 9 9\n";
    }
    std::vector<LabeledStory> stories = {story_of("s", "t0 t1 t2", "t3 t4", "t5 t6 t7", "t8 t9", 1)};
    VocabOptions o;
    o.d_w = 3;
    o.embeddings = path;
    Vocab v = build_vocab(stories, o);
    CHECK(v.size() == 11);
    CHECK(v.pretrained_count() == 6);
    std::size_t frozen_tokens = 0, trainable = 0;
    for (std::size_t i = 1; i < v.size(); ++i) (v.frozen[i] ? frozen_tokens : trainable)++;
    CHECK(frozen_tokens == 6);
    CHECK(trainable == 4);
    const std::size_t t4 = v.lookup("t4");
    CHECK(v.embeddings(t4, 0) == 4.0);
    CHECK(v.embeddings(t4, 1) == -4.0);
    CHECK(v.frozen[0] == 1);
    CHECK(embedding_file_dim(path) == 3);

    o.d_w = 4;
    CHECK(kind_of([&] { build_vocab(stories, o); }) == ErrorKind::embedding_dim_mismatch);
}

TEST_CASE("term frequency counts over the whole story") {
    // 50 tokens in total, "once" appears a single time.
    std::string expo, climax, e1, e2;
    for (int i = 0; i < 19; ++i) expo += "a ";
    expo += "once";
    for (int i = 0; i < 10; ++i) climax += "b ";
    for (int i = 0; i < 10; ++i) e1 += "c ";
    for (int i = 0; i < 10; ++i) e2 += "d ";
    auto s = story_of("tf", expo, climax, e1, e2, 1);
    Vocab v = testutil::small_vocab({s});
    auto f = featurize(s, v);
    CHECK(f.exposition().tf.back() == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(f.exposition().tf.front() == doctest::Approx(19.0 / 50.0));
    CHECK(f.climax().tf[0] == doctest::Approx(0.2));
}

TEST_CASE("exact match on the worked example") {
    auto s = testutil::example_story();
    Vocab v = testutil::small_vocab({s});
    auto f = featurize(s, v);
    const auto& e2 = f.ending(2);
    for (std::size_t i = 0; i < s.ending2.size(); ++i) {
        if (s.ending2[i] == "test" || s.ending2[i] == "tom" || s.ending2[i] == "the")
            CHECK(e2.exact_match[i] == 1.0);
        if (s.ending2[i] == "hurried" || s.ending2[i] == "study") CHECK(e2.exact_match[i] == 0.0);
    }
    for (std::size_t i = 0; i < s.exposition.size(); ++i) {
        if (s.exposition[i] == kSentenceMarker) CHECK(f.exposition().exact_match[i] == 0.0);
        if (s.exposition[i] == "test") CHECK(f.exposition().exact_match[i] == 1.0);
        if (s.exposition[i] == "boredom") CHECK(f.exposition().exact_match[i] == 0.0);
    }
    // Without a sidecar every tag id is padding.
    for (const auto& seg : f.segments) {
        CHECK(seg.pos == std::vector<std::size_t>(seg.length(), 0));
        CHECK(seg.ner == std::vector<std::size_t>(seg.length(), 0));
        CHECK(seg.rel == std::vector<std::size_t>(seg.length(), 0));
    }
}

TEST_CASE("annotation sidecars are validated") {
    auto s = story_of("a1", "x y", "z", "p q", "r", 1);
    Vocab v = testutil::small_vocab({s});
    Annotation ann = parse_annotation(R"({"story_id":"a1","pos":[[1,2],[3],[4,5],[6]],"ner":[[],[],[],[]]})");
    CHECK(ann.story_id == "a1");
    auto f = featurize(s, v, &ann);
    CHECK(f.exposition().pos == std::vector<std::size_t>{1, 2});
    CHECK(f.ending(2).pos == std::vector<std::size_t>{6});
    CHECK(f.climax().ner == std::vector<std::size_t>{0});

    Annotation short_ann = parse_annotation(R"({"story_id":"a1","pos":[[1],[3],[4,5],[6]]})");
    CHECK(kind_of([&] { featurize(s, v, &short_ann); }) == ErrorKind::sidecar_length_mismatch);

    Annotation big = parse_annotation(R"({"story_id":"a1","rel":[[1,2],[3],[4,500],[6]]})");
    CHECK(kind_of([&] { featurize(s, v, &big); }) == ErrorKind::tag_out_of_range);

    testutil::TempDir dir("ann");
    {
        std::ofstream out(dir / "a.jsonl");
        out << R"({"story_id":"a1","pos":[[1,2],[3],[4,5],[6]]})" << "\n\n"
            << R"({"story_id":"a2"})" << "\n";
    }
    auto index = load_annotations(dir / "a.jsonl");
    CHECK(index.size() == 2);
    CHECK(index.at("a1").pos[0] == std::vector<std::size_t>{1, 2});
}

TEST_CASE("synthetic corpus is deterministic and planted") {
    auto a = gen_synthetic(64, 40, 7);
    auto b = gen_synthetic(64, 40, 7);
    REQUIRE(a.size() == 64);
    int label1 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].story_id == b[i].story_id);
        CHECK(a[i].exposition == b[i].exposition);
        CHECK(a[i].climax == b[i].climax);
        CHECK(a[i].ending1 == b[i].ending1);
        CHECK(a[i].ending2 == b[i].ending2);
        CHECK(a[i].label == b[i].label);
        CHECK(overlap_oracle(a[i]) == a[i].label);
        label1 += a[i].label == 1;
        CHECK(std::count(a[i].exposition.begin(), a[i].exposition.end(), std::string(kSentenceMarker)) == 2);
    }
    CHECK(label1 > 10);
    CHECK(label1 < 54);
    auto c = gen_synthetic(64, 40, 8);
    CHECK(c[0].exposition != a[0].exposition);
    CHECK(kind_of([] { gen_synthetic(0, 40, 1); }) == ErrorKind::invalid_argument);
}

}
