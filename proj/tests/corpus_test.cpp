// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#include "rid/corpus.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <set>

#include "rid/pgm.hpp"

using namespace rid;

TEST(Corpus, SameSeedIsBitwiseIdentical) {
    Corpus a = generate_corpus(42, 4, 8, 4, 0.25);
    Corpus b = generate_corpus(42, 4, 8, 4, 0.25);
    ASSERT_EQ(a.train_conditions.size(), b.train_conditions.size());
    for (size_t i = 0; i < a.train_conditions.size(); ++i) {
        EXPECT_EQ(a.train_conditions[i].embedding, b.train_conditions[i].embedding);
        for (size_t j = 0; j < a.train_images[i].size(); ++j)
            EXPECT_EQ(a.train_images[i][j].vec(), b.train_images[i][j].vec());
    }
    EXPECT_EQ(a.align_head, b.align_head);
    EXPECT_EQ(a.fd_proj, b.fd_proj);
}

TEST(Corpus, TestFractionCounts) {
    // 10 styles at fraction 0.1 leaves exactly one held-out style per class.
    Corpus c = generate_corpus(7, 2, 10, 1, 0.1);
    EXPECT_EQ(c.test_conditions.size(), 2u);
    EXPECT_EQ(c.train_conditions.size(), 18u);
}

TEST(Corpus, TrainTestStylesDisjoint) {
    for (uint64_t seed : {1u, 2u, 3u}) {
        for (double f : {0.1, 0.25, 0.5}) {
            Corpus c = generate_corpus(seed, 3, 8, 1, f);
            std::set<std::pair<int, double>> train, test;
            for (const auto& t : c.train_conditions) train.insert({t.class_id, t.style});
            for (const auto& t : c.test_conditions) {
                test.insert({t.class_id, t.style});
                EXPECT_EQ(train.count({t.class_id, t.style}), 0u);
            }
            EXPECT_FALSE(test.empty());
            EXPECT_FALSE(train.empty());
        }
    }
}

TEST(Corpus, PixelsInRange) {
    Corpus c = generate_corpus(5, 4, 4, 3, 0.25);
    auto check = [](const std::vector<std::vector<Tensor>>& sets) {
        for (const auto& imgs : sets)
            for (const auto& img : imgs)
                for (int i = 0; i < img.numel(); ++i) {
                    EXPECT_GE(img.at(static_cast<size_t>(i)), 0.0);
                    EXPECT_LE(img.at(static_cast<size_t>(i)), 1.0);
                }
    };
    check(c.train_images);
    check(c.test_images);
}

TEST(Corpus, DistinctConditionsHaveDistinctEmbeddings) {
    Corpus c = generate_corpus(11, 4, 8, 1, 0.25);
    std::vector<const Condition*> all;
    for (const auto& t : c.train_conditions) all.push_back(&t);
    for (const auto& t : c.test_conditions) all.push_back(&t);
    for (size_t i = 0; i < all.size(); ++i)
        for (size_t j = i + 1; j < all.size(); ++j) {
            double d = 0;
            for (size_t k = 0; k < all[i]->embedding.size(); ++k) {
                const double diff = all[i]->embedding[k] - all[j]->embedding[k];
                d += diff * diff;
            }
            EXPECT_GT(d, 1e-12) << "conditions " << i << " and " << j;
        }
}

TEST(Corpus, InvalidArgumentsRejected) {
    EXPECT_THROW(generate_corpus(1, 1, 8, 4, 0.25), contract_error);
    EXPECT_THROW(generate_corpus(1, 4, 8, 0, 0.25), contract_error);
    EXPECT_THROW(generate_corpus(1, 4, 8, 4, 0.0), contract_error);
    EXPECT_THROW(generate_corpus(1, 4, 8, 4, 1.0), contract_error);
}

TEST(Corpus, PgmExportRoundTrip) {
    Corpus c = generate_corpus(3, 4, 4, 1, 0.25);
    const std::string path = ::testing::TempDir() + "corpus_sample.pgm";
    write_pgm(path, c.train_images[0][0]);
    std::ifstream in(path, std::ios::binary);
    ASSERT_TRUE(in.good());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    EXPECT_EQ(magic, "P5");
    EXPECT_EQ(w, 16);
    EXPECT_EQ(h, 16);
    EXPECT_EQ(maxval, 255);
    in.get();
    std::vector<char> data(static_cast<size_t>(w) * h);
    in.read(data.data(), static_cast<std::streamsize>(data.size()));
    EXPECT_EQ(in.gcount(), static_cast<std::streamsize>(data.size()));
    std::remove(path.c_str());
}
