#include "textad/corpus.hpp"

#include <gtest/gtest.h>

#include <map>

#include "test_util.hpp"

namespace textad::corpus {
namespace {

using textad::testing::TempDir;
using textad::testing::write_text;

std::vector<Document> docs_with_labels(const std::vector<std::string>& labels, const std::string& prefix) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        docs.push_back({prefix + ":" + std::to_string(i), "text " + std::to_string(i), labels[i]});
    }
    return docs;
}

TEST(LoadCorpus, JsonlReadsEveryRecordInOrder) {
    TempDir dir;
    write_text(dir / "c.jsonl",
               "{\"text\": \"one\", \"label\": \"a\"}\n{\"text\": \"two\", \"label\": \"a\"}\n"
               "{\"text\": \"three\", \"label\": \"b\"}\n");
    const auto docs = load_corpus(dir / "c.jsonl", CorpusFormat::jsonl);
    ASSERT_EQ(docs.size(), 3u);
    std::map<std::string, int> counts;
    for (const auto& d : docs) ++counts[d.label];
    EXPECT_EQ(counts["a"], 2);
    EXPECT_EQ(counts["b"], 1);
    EXPECT_EQ(docs[0].id, "c:0");
    EXPECT_EQ(docs[2].text, "three");
}

TEST(LoadCorpus, LabeledDirsUsesSortedClassAndFileOrder) {
    TempDir dir;
    write_text(dir / "root/world/x.txt", "w1");
    write_text(dir / "root/sports/b.txt", "s2");
    write_text(dir / "root/sports/a.txt", "s1");
    const auto docs = load_corpus(dir / "root", CorpusFormat::labeled_dirs);
    ASSERT_EQ(docs.size(), 3u);
    EXPECT_EQ(docs[0].text, "s1");
    EXPECT_EQ(docs[1].text, "s2");
    EXPECT_EQ(docs[2].label, "world");
    EXPECT_EQ(docs[2].id, "root:2");
}

TEST(LoadCorpus, MissingLabelNamesTheLine) {
    TempDir dir;
    write_text(dir / "c.jsonl", "{\"text\": \"ok\", \"label\": \"a\"}\n{\"text\": \"no label\"}\n");
    try {
        load_corpus(dir / "c.jsonl", CorpusFormat::jsonl);
        FAIL() << "expected a format error";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("label"), std::string::npos);
    }
}

TEST(LoadCorpus, EmptyCorpusIsAnError) {
    TempDir dir;
    write_text(dir / "c.jsonl", "\n\n");
    EXPECT_THROW(load_corpus(dir / "c.jsonl", CorpusFormat::jsonl), EmptyInputError);
    EXPECT_THROW(load_corpus(dir / "missing.jsonl", CorpusFormat::jsonl), ConfigError);
}

TEST(LoadCorpus, JsonlRoundTrip) {
    TempDir dir;
    const std::vector<Document> docs = {{"", "héllo wörld", "x"}, {"", "tab\there", "y"}};
    write_jsonl(dir / "out.jsonl", docs);
    const auto back = load_corpus(dir / "out.jsonl", CorpusFormat::jsonl);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].text, docs[0].text);
    EXPECT_EQ(back[1].label, "y");
}

TEST(Preprocess, CvddStyleAppliesRulesInOrder) {
    const StopwordSet stop = {"the"};
    EXPECT_EQ(preprocess_text("The 2 cats RAN!", PreprocessProfile::cvdd_style(), stop), "cats ran");
}

TEST(Preprocess, MinimalOnlyLowercases) {
    EXPECT_EQ(preprocess_text("Hello World", PreprocessProfile::minimal()), "hello world");
    EXPECT_EQ(preprocess_text("Hello, World!", PreprocessProfile::minimal()), "hello, world!");
}

TEST(Preprocess, UnicodePunctuationAndCase) {
    const auto out = preprocess_text("ÉCOLE—«Straße» naïve 123 ٣٤", PreprocessProfile::cvdd_style());
    EXPECT_EQ(out, "école straße naïve");
}

TEST(Preprocess, StripsNewsgroupHeaders) {
    const std::string text = "From: someone@example.com\nSubject: Space shuttle\n\nThe launch happened today";
    EXPECT_EQ(preprocess_text(text, PreprocessProfile::cvdd_style(), {"the"}), "launch happened today");
    // A blank line not preceded by header lines is kept.
    EXPECT_EQ(strip_header_block("first paragraph\n\nsecond"), "first paragraph\n\nsecond");
}

TEST(Preprocess, IdempotentForEveryProfile) {
    Rng rng(7);
    const std::vector<std::string> pieces = {"The", "cat", "RAN", "!", "42", "x", "ab", "Über", "—", "...", "\n",
                                             "\n\n", "Subject:", "From: a", " ", "\t", "data-set", "3.14", "«q»"};
    const StopwordSet stop = {"the", "cat"};
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        const auto n = rng.uniform_index(12) + 1;
        for (std::size_t i = 0; i < n; ++i) {
            text += pieces[rng.uniform_index(pieces.size())];
            if (rng.bernoulli(0.6)) text += ' ';
        }
        for (const auto& profile : {PreprocessProfile::cvdd_style(), PreprocessProfile::minimal()}) {
            const auto once = preprocess_text(text, profile, stop);
            EXPECT_EQ(preprocess_text(once, profile, stop), once) << "input: " << text;
        }
    }
}

TEST(Stopwords, FileIgnoresCommentsAndBlankLines) {
    TempDir dir;
    write_text(dir / "stop.txt", "# header\nthe\n\n  and  \nof # trailing\n");
    const auto words = load_stopwords(dir / "stop.txt");
    EXPECT_EQ(words, (StopwordSet{"the", "and", "of"}));
}

TEST(Stopwords, PackagedListLoads) {
    const auto words = load_stopwords(std::filesystem::path(TEXTAD_DATA_DIR) / "stopwords_en.txt");
    EXPECT_TRUE(words.contains("the"));
    EXPECT_GT(words.size(), 100u);
}

TEST(MakeAdSplit, FiltersTrainToInliersAndFlagsTest) {
    Partition p;
    p.train = docs_with_labels({"a", "a", "a", "a"}, "tr");
    p.test = docs_with_labels({"a", "b", "a", "b", "b"}, "te");
    const auto split = make_ad_split(p, "a");
    EXPECT_EQ(split.train.size(), 4u);
    ASSERT_EQ(split.test.size(), 5u);
    EXPECT_EQ(std::count(split.test_is_inlier.begin(), split.test_is_inlier.end(), true), 2);
    EXPECT_EQ(split.contamination_rate, 0.0);
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        EXPECT_EQ(split.test_is_inlier[i], split.test[i].label == "a");
    }
}

TEST(MakeAdSplit, LabelAbsentFromTrainGivesEmptyTrain) {
    Partition p;
    p.train = docs_with_labels({"a", "a"}, "tr");
    p.test = docs_with_labels({"a", "b"}, "te");
    EXPECT_TRUE(make_ad_split(p, "b").train.empty());
    EXPECT_THROW(make_ad_split(p, "zzz"), ConfigError);
}

TEST(HoldoutPartition, StratifiesByClass) {
    const auto docs = docs_with_labels({"a", "a", "a", "a", "a", "b", "b", "b", "b", "b"}, "d");
    const auto p = holdout_partition(docs, 0.2);
    EXPECT_EQ(p.train.size(), 8u);
    EXPECT_EQ(p.test.size(), 2u);
    EXPECT_EQ(p.test[0].id, "d:4");
    EXPECT_EQ(p.test[1].id, "d:9");
}

ADSplit split_with_train(std::size_t n) {
    ADSplit s;
    s.inlier_label = "in";
    s.train = docs_with_labels(std::vector<std::string>(n, "in"), "train");
    s.test = docs_with_labels({"in", "out"}, "test");
    s.test_is_inlier = {true, false};
    return s;
}

std::vector<Document> pool_of(std::size_t per_class) {
    std::vector<std::string> labels;
    for (const char* c : {"x", "y", "z"}) {
        for (std::size_t i = 0; i < per_class; ++i) labels.emplace_back(c);
    }
    return docs_with_labels(labels, "pool");
}

TEST(Contaminate, ZeroRateIsIdentity) {
    const auto s = split_with_train(90);
    const auto pool = pool_of(10);
    const auto out = contaminate(s, 0.0, pool, 1);
    EXPECT_EQ(out.train, s.train);
    EXPECT_EQ(out.contamination_rate, 0.0);
}

TEST(Contaminate, TenPercentOfNinety) {
    const auto s = split_with_train(90);
    const auto pool = pool_of(10);
    const auto out = contaminate(s, 0.10, pool, 1);
    EXPECT_EQ(out.train.size(), 100u);
    EXPECT_DOUBLE_EQ(out.contamination_rate, 0.10);
    const auto outliers = std::count_if(out.train.begin(), out.train.end(), [](const Document& d) { return d.label != "in"; });
    EXPECT_EQ(outliers, 10);
    EXPECT_EQ(out.test, s.test);
}

TEST(Contaminate, SweepCounts) {
    const auto s = split_with_train(90);
    const auto pool = pool_of(10);
    const std::vector<std::pair<double, std::size_t>> expected = {{0.0, 0}, {0.05, 5}, {0.10, 10}, {0.15, 16}};
    for (const auto& [rate, n] : expected) {
        const auto out = contaminate(s, rate, pool, 3);
        EXPECT_EQ(out.train.size() - 90, n) << rate;
        // realized fraction within one document of nominal
        EXPECT_LE(std::abs(out.contamination_rate * static_cast<double>(out.train.size()) -
                           rate * static_cast<double>(out.train.size())),
                  1.0);
    }
}

TEST(Contaminate, DeterministicPerSeed) {
    const auto s = split_with_train(90);
    const auto pool = pool_of(10);
    for (auto sampling : {PoolSampling::uniform_across_classes, PoolSampling::proportional}) {
        const auto a = contaminate(s, 0.1, pool, 11, sampling);
        const auto b = contaminate(s, 0.1, pool, 11, sampling);
        const auto c = contaminate(s, 0.1, pool, 12, sampling);
        EXPECT_EQ(a.train, b.train);
        EXPECT_NE(a.train, c.train);
        // Different seeds differ only in which pool members are appended.
        EXPECT_TRUE(std::equal(s.train.begin(), s.train.end(), c.train.begin()));
    }
}

TEST(Contaminate, UniformAcrossClassesBalancesSmallClasses) {
    const auto s = split_with_train(270);
    std::vector<std::string> labels(60, "big");
    for (int i = 0; i < 30; ++i) labels.emplace_back("small");
    const auto pool = docs_with_labels(labels, "pool");
    const auto out = contaminate(s, 0.1, pool, 5, PoolSampling::uniform_across_classes);
    const auto small = std::count_if(out.train.begin(), out.train.end(), [](const Document& d) { return d.label == "small"; });
    // 30 draws split evenly in expectation (15/15); proportional would give ~10.
    EXPECT_GE(small, 10);
    EXPECT_LE(small, 20);
}

TEST(Contaminate, ErrorsOnBadInputs) {
    const auto s = split_with_train(90);
    const auto small_pool = pool_of(2);
    try {
        contaminate(s, 0.10, small_pool, 1);
        FAIL();
    } catch (const CapacityError& e) {
        EXPECT_NE(std::string(e.what()).find("10"), std::string::npos);
    }
    EXPECT_THROW(contaminate(s, 0.5, small_pool, 1), ConfigError);
    EXPECT_THROW(contaminate(s, -0.1, small_pool, 1), ConfigError);
    EXPECT_THROW(contaminate(s, 0.1, s.test, 1), ConfigError);
}

}  // namespace
}  // namespace textad::corpus
