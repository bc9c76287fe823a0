#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <set>

#include "wirelearn/data.hpp"

using namespace wirelearn;

namespace {

std::string write_temp(const std::string& name, const std::string& contents) {
    std::string path = "test_tmp_" + name;
    std::ofstream os(path, std::ios::binary);
    os << contents;
    return path;
}

}  // namespace

TEST_CASE("tokenizer lowercases, strips and splits") {
    auto toks = tokenize("Good, GREAT!  #win @you don't");
    REQUIRE(toks == std::vector<std::string>{"good", "great", "#win", "@you", "don't"});
}

TEST_CASE("csv splitter handles quoted commas") {
    std::vector<std::string> fields;
    REQUIRE(split_csv_line("\"0\",\"123\",\"date\",\"NO_QUERY\",\"user\",\"hello, world\"", fields));
    REQUIRE(fields.size() == 6);
    CHECK(fields[0] == "0");
    CHECK(fields[5] == "hello, world");
}

TEST_CASE("polarity mapping on the sentiment140 layout") {
    std::string path = write_temp("s140.csv",
                                  "\"0\",\"1\",\"d\",\"q\",\"u\",\"sad text\"\n"
                                  "\"4\",\"2\",\"d\",\"q\",\"u\",\"happy text\"\n"
                                  "\"0\",\"3\",\"d\",\"q\",\"u\",\"more sad\"\n"
                                  "\"4\",\"4\",\"d\",\"q\",\"u\",\"more happy\"\n");
    Corpus c = load_corpus(path, 0, CorpusFormat::Sentiment140, 1);
    REQUIRE(c.records.size() == 4);
    CHECK(c.records[0].first == 0);
    CHECK(c.records[1].first == 1);
    CHECK(c.records[2].first == 0);
    CHECK(c.records[3].first == 1);
    std::remove(path.c_str());
}

TEST_CASE("malformed rows are skipped and counted") {
    std::string path = write_temp("bad.csv",
                                  "0,fine text\n"
                                  "not-a-label,text\n"
                                  "1,also fine\n"
                                  "1,too,many,fields\n");
    Corpus c = load_corpus(path, 0, CorpusFormat::Simple, 1);
    CHECK(c.records.size() == 2);
    CHECK(c.skipped_rows == 2);
    std::remove(path.c_str());
}

TEST_CASE("subsampling is deterministic for a fixed seed") {
    std::string body;
    for (int i = 0; i < 40; ++i) body += (i % 2 ? "1,pos text " : "0,neg text ") + std::to_string(i) + "\n";
    std::string path = write_temp("sub.csv", body);
    Corpus a = load_corpus(path, 10, CorpusFormat::Simple, 7);
    Corpus b = load_corpus(path, 10, CorpusFormat::Simple, 7);
    REQUIRE(a.records.size() == 10);
    CHECK(a.records == b.records);
    Corpus c = load_corpus(path, 10, CorpusFormat::Simple, 8);
    CHECK(a.records != c.records);  // different seed picks a different subset
    std::remove(path.c_str());
}

TEST_CASE("vocab keeps the most frequent words with lexicographic ties") {
    Corpus c;
    c.records = {{1, "b b b a a c"}, {0, "a c d"}};
    // counts: a3 b3 c2 d1 -> ids: a=1 b=2 c=3 d=4
    Vocab v = build_vocab(c, 10000);
    CHECK(v.size() == 5);
    CHECK(v.lookup("a") == 1);
    CHECK(v.lookup("b") == 2);
    CHECK(v.lookup("c") == 3);
    CHECK(v.lookup("d") == 4);
    CHECK(v.lookup("zzz") == 0);
}

TEST_CASE("vocab caps at the requested size") {
    Corpus c;
    std::string text;
    for (int i = 0; i < 120; ++i) text += "tok" + std::to_string(i) + " ";
    c.records = {{1, text}};
    Vocab v = build_vocab(c, 100);
    CHECK(v.size() == 101);
    size_t oov = 0;
    for (int i = 0; i < 120; ++i)
        if (v.lookup("tok" + std::to_string(i)) == 0) ++oov;
    CHECK(oov == 20);
}

TEST_CASE("vocabulary built twice is identical") {
    Corpus c = synthetic_corpus(500, 3);
    Vocab a = build_vocab(c), b = build_vocab(c);
    CHECK(a.ids == b.ids);
}

TEST_CASE("encode pads, truncates and folds case") {
    Corpus c;
    c.records = {{1, "good bad filler"}};
    Vocab v = build_vocab(c);
    SECTION("empty text is all padding") {
        auto ids = encode("", v, 30);
        CHECK(ids == std::vector<int32_t>(30, 0));
    }
    SECTION("long text truncates to the first 30 tokens") {
        std::string text;
        for (int i = 0; i < 40; ++i) text += "good ";
        auto ids = encode(text, v, 30);
        REQUIRE(ids.size() == 30);
        for (int32_t id : ids) CHECK(id == v.lookup("good"));
    }
    SECTION("case folding maps variants to one id") {
        auto ids = encode("Good GOOD good", v, 30);
        CHECK(ids[0] == ids[1]);
        CHECK(ids[1] == ids[2]);
        CHECK(ids[0] != 0);
        for (size_t i = 3; i < 30; ++i) CHECK(ids[i] == 0);
    }
}

TEST_CASE("encode is a fixed point on already-encoded text") {
    Corpus c = synthetic_corpus(200, 5);
    Vocab v = build_vocab(c);
    auto ids = encode(c.records[0].second, v, 30);
    // map ids back to tokens (where nonzero) then re-encode
    std::vector<std::string> inv(v.size());
    for (const auto& [tok, id] : v.ids) inv[static_cast<size_t>(id)] = tok;
    std::string text;
    for (int32_t id : ids)
        if (id) text += inv[static_cast<size_t>(id)] + " ";
    auto again = encode(text, v, 30);
    CHECK(again == ids);
}

TEST_CASE("split keeps 90/10 and equal disjoint shards") {
    std::vector<EncodedSample> samples(100);
    for (size_t i = 0; i < samples.size(); ++i) {
        samples[i].ids.assign(30, static_cast<int32_t>(i));
        samples[i].label = static_cast<int>(i % 2);
    }
    DataSplit s = split_and_shard(samples, 0.10, 1, 11);
    CHECK(s.test.size() == 10);
    CHECK(s.shards[0].size() == 90);

    DataSplit s3 = split_and_shard(samples, 0.10, 3, 11);
    CHECK(s3.test.size() == 10);
    for (const auto& shard : s3.shards) CHECK(shard.size() == 30);
    std::set<int32_t> seen;
    size_t total = 0;
    for (const auto& shard : s3.shards)
        for (const auto& sample : shard) {
            seen.insert(sample.ids[0]);
            ++total;
        }
    CHECK(seen.size() == total);  // pairwise disjoint
}

TEST_CASE("sharding is deterministic per seed") {
    Corpus c = synthetic_corpus(300, 9);
    Vocab v = build_vocab(c);
    std::vector<EncodedSample> samples;
    for (const auto& [label, text] : c.records)
        samples.push_back({encode(text, v, 30), label});
    DataSplit a = split_and_shard(samples, 0.1, 3, 42);
    DataSplit b = split_and_shard(samples, 0.1, 3, 42);
    for (size_t u = 0; u < 3; ++u) {
        REQUIRE(a.shards[u].size() == b.shards[u].size());
        for (size_t i = 0; i < a.shards[u].size(); ++i)
            CHECK(a.shards[u][i].ids == b.shards[u][i].ids);
    }
}

TEST_CASE("fewer samples than users is an error") {
    std::vector<EncodedSample> samples(2);
    CHECK_THROWS_AS(split_and_shard(samples, 0.1, 3, 1), std::invalid_argument);
}

TEST_CASE("synthetic corpus is balanced and learnable by keywords") {
    Corpus c = synthetic_corpus(2000, 21);
    REQUIRE(c.records.size() == 2000);
    size_t pos = 0, cue_consistent = 0;
    for (const auto& [label, text] : c.records) {
        pos += static_cast<size_t>(label);
        bool has_pos = text.find("pos") != std::string::npos;
        bool has_neg = text.find("neg") != std::string::npos;
        if ((label == 1 && has_pos && !has_neg) || (label == 0 && has_neg && !has_pos))
            ++cue_consistent;
    }
    CHECK(pos > 850);
    CHECK(pos < 1150);
    CHECK(cue_consistent > 1700);  // ~8% of texts carry flipped cues
}
