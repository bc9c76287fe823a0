#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "wirelearn/rng.hpp"

namespace wirelearn {

struct Corpus {
    // (label, text); labels are 0 (negative) or 1 (positive)
    std::vector<std::pair<int, std::string>> records;
    size_t skipped_rows = 0;
};

struct Vocab {
    std::unordered_map<std::string, int32_t> ids;  // token -> id, 1-based
    int32_t max_id = 0;                            // 0 is reserved for pad/OOV

    int32_t lookup(const std::string& token) const {
        auto it = ids.find(token);
        return it == ids.end() ? 0 : it->second;
    }
    size_t size() const { return ids.size() + 1; }  // including the reserved id
};

struct EncodedSample {
    std::vector<int32_t> ids;  // fixed length (pad/truncate applied)
    int label = 0;
};

enum class CorpusFormat { Sentiment140, Simple };

/// Lowercase, keep only [a-z0-9'@#], split on whitespace.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char uc : text) {
        char c = static_cast<char>(std::tolower(uc));
        bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '\'' || c == '@' || c == '#';
        if (keep) {
            cur.push_back(c);
        } else if (std::isspace(uc)) {
            if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
        }
        // anything else is stripped without breaking the token
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

/// Minimal CSV field splitter handling double-quoted fields with embedded
/// commas and doubled quotes. Returns false on unbalanced quoting.
inline bool split_csv_line(const std::string& line, std::vector<std::string>& fields) {
    fields.clear();
    std::string cur;
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(c);
            }
        } else {
            if (c == '"' && cur.empty()) {
                in_quotes = true;
            } else if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else if (c == '\r') {
                // tolerate CRLF
            } else {
                cur.push_back(c);
            }
        }
    }
    if (in_quotes) return false;
    fields.push_back(cur);
    return true;
}

/// Reads a corpus file. Sentiment140 layout: 6 fields, polarity first
/// (0 -> label 0, 4 -> label 1), text last. Simple layout: label,text.
/// Rows that do not parse are skipped and counted. If the file holds more
/// than max_records rows, a seeded uniform subsample is retained (original
/// order preserved). max_records == 0 keeps everything.
inline Corpus load_corpus(const std::string& path, size_t max_records,
                          CorpusFormat format, uint64_t seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_corpus: cannot open " + path);
    Corpus corpus;
    std::string line;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!split_csv_line(line, fields)) {
            ++corpus.skipped_rows;
            continue;
        }
        int label = -1;
        const std::string* text = nullptr;
        if (format == CorpusFormat::Sentiment140) {
            if (fields.size() != 6) {
                ++corpus.skipped_rows;
                continue;
            }
            if (fields[0] == "0") label = 0;
            else if (fields[0] == "4") label = 1;
            text = &fields[5];
        } else {
            if (fields.size() != 2) {
                ++corpus.skipped_rows;
                continue;
            }
            if (fields[0] == "0") label = 0;
            else if (fields[0] == "1") label = 1;
            text = &fields[1];
        }
        if (label < 0) {
            ++corpus.skipped_rows;
            continue;
        }
        corpus.records.emplace_back(label, *text);
    }
    if (max_records > 0 && corpus.records.size() > max_records) {
        std::vector<size_t> idx(corpus.records.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        RngStream rng(seed, "data.subsample");
        rng.shuffle(idx);
        idx.resize(max_records);
        std::sort(idx.begin(), idx.end());
        std::vector<std::pair<int, std::string>> kept;
        kept.reserve(max_records);
        for (size_t i : idx) kept.push_back(std::move(corpus.records[i]));
        corpus.records = std::move(kept);
    }
    return corpus;
}

/// Ranks tokens by (frequency desc, token asc) and assigns ids 1..max_words.
/// Everything else maps to the reserved id 0.
inline Vocab build_vocab(const Corpus& corpus, size_t max_words = 10000) {
    if (corpus.records.empty()) throw std::invalid_argument("build_vocab: empty corpus");
    std::unordered_map<std::string, uint64_t> counts;
    for (const auto& [label, text] : corpus.records)
        for (const auto& tok : tokenize(text)) ++counts[tok];
    std::vector<std::pair<std::string, uint64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > max_words) ranked.resize(max_words);
    Vocab vocab;
    vocab.ids.reserve(ranked.size());
    for (size_t i = 0; i < ranked.size(); ++i)
        vocab.ids.emplace(ranked[i].first, static_cast<int32_t>(i + 1));
    vocab.max_id = static_cast<int32_t>(ranked.size());
    return vocab;
}

/// Token ids, right-padded with 0 or truncated to seq_len.
inline std::vector<int32_t> encode(const std::string& text, const Vocab& vocab,
                                   size_t seq_len = 30) {
    std::vector<int32_t> out(seq_len, 0);
    auto tokens = tokenize(text);
    for (size_t i = 0; i < tokens.size() && i < seq_len; ++i)
        out[i] = vocab.lookup(tokens[i]);
    return out;
}

struct DataSplit {
    std::vector<std::vector<EncodedSample>> shards;  // one per user
    std::vector<EncodedSample> test;
};

/// Seeded shuffle; the last test_fraction of samples become the shared test
/// set and the rest is cut into n_users equal shards (remainder dropped).
inline DataSplit split_and_shard(const std::vector<EncodedSample>& samples,
                                 double test_fraction, size_t n_users,
                                 uint64_t seed) {
    if (n_users == 0) throw std::invalid_argument("split_and_shard: need at least one user");
    if (samples.size() < n_users)
        throw std::invalid_argument("split_and_shard: fewer samples than users");
    std::vector<size_t> idx(samples.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    RngStream rng(seed, "data.shuffle");
    rng.shuffle(idx);
    size_t n_test = static_cast<size_t>(
        std::llround(static_cast<double>(samples.size()) * test_fraction));
    size_t n_train = samples.size() - n_test;
    size_t per_user = n_train / n_users;
    DataSplit split;
    split.shards.resize(n_users);
    for (size_t u = 0; u < n_users; ++u) {
        split.shards[u].reserve(per_user);
        for (size_t i = 0; i < per_user; ++i)
            split.shards[u].push_back(samples[idx[u * per_user + i]]);
    }
    split.test.reserve(n_test);
    for (size_t i = n_train; i < samples.size(); ++i)
        split.test.push_back(samples[idx[i]]);
    return split;
}

/// Keyword-driven synthetic corpus so the suite runs without the real
/// dataset. Each text mixes filler words with 1-3 cue words from the label's
/// sentiment list; a small fraction of texts carry cues of the wrong class,
/// which caps attainable accuracy just above 0.9.
inline Corpus synthetic_corpus(size_t n_samples, uint64_t seed,
                               size_t filler_words = 1500) {
    Corpus corpus;
    corpus.records.reserve(n_samples);
    RngStream rng(seed, "data.synthetic");
    const int n_cues = 25;
    for (size_t s = 0; s < n_samples; ++s) {
        int label = rng.uniform() < 0.5 ? 1 : 0;
        bool flip_cues = rng.uniform() < 0.08;
        int cue_class = flip_cues ? 1 - label : label;
        int n_cue = 1 + static_cast<int>(rng.next_below(3));
        int n_fill = 7 + static_cast<int>(rng.next_below(12));
        std::vector<std::string> words;
        words.reserve(static_cast<size_t>(n_cue + n_fill));
        for (int i = 0; i < n_cue; ++i) {
            int c = static_cast<int>(rng.next_below(n_cues));
            words.push_back((cue_class == 1 ? "pos" : "neg") + std::to_string(c));
        }
        for (int i = 0; i < n_fill; ++i)
            words.push_back("w" + std::to_string(rng.next_below(filler_words)));
        rng.shuffle(words);
        std::string text;
        for (size_t i = 0; i < words.size(); ++i) {
            if (i) text.push_back(' ');
            text += words[i];
        }
        corpus.records.emplace_back(label, std::move(text));
    }
    return corpus;
}

}  // namespace wirelearn
