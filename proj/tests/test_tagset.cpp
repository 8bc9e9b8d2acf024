// Copyright 2026 The projtag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "projtag/tagset.hpp"

namespace projtag {
namespace {

TEST(PosTagSet, DefaultHas22Categories) {
  const auto pos = PosTagSet::default_set();
  EXPECT_EQ(pos.size(), 22);
  EXPECT_EQ(HybridTagSet(pos).size(), 88);
  for (const char* t : {"a", "c", "d", "y", "m", "n", "f", "nr", "ns", "t", "s", "p", "q", "r",
                        "u", "v", "w", "x"}) {
    EXPECT_TRUE(pos.contains(t)) << t;
  }
}

TEST(PosTagSet, RejectsBadInventories) {
  EXPECT_THROW(PosTagSet({"n", "n"}), TagSetError);
  EXPECT_THROW(PosTagSet({"n", "_"}), TagSetError);
  EXPECT_THROW(PosTagSet({""}), TagSetError);
  EXPECT_THROW(PosTagSet(std::vector<std::string>{}), TagSetError);
}

TEST(PosTagSet, ReadsFileWithComments) {
  const auto path = std::filesystem::temp_directory_path() / "projtag_tags.txt";
  std::ofstream(path) << "# header\nn\n\n  v  # verb\na\n";
  const auto pos = read_pos_tagset(path.string());
  EXPECT_EQ(pos.tags(), (std::vector<std::string>{"n", "v", "a"}));
  std::ofstream(path) << "n\nv\nn\n";
  EXPECT_THROW(read_pos_tagset(path.string()), FormatError);
  EXPECT_THROW(read_pos_tagset("/nonexistent/tags.txt"), FormatError);
}

TEST(PosTagSet, ShippedFileMatchesDefault) {
  EXPECT_EQ(read_pos_tagset(std::string(PROJTAG_DATA_DIR) + "/pos_tags.txt"),
            PosTagSet::default_set());
}

TEST(HybridTagSet, IndexLayoutAndRoundTrip) {
  const HybridTagSet ts(PosTagSet::default_set());
  EXPECT_EQ(ts.index(Boundary::B, 0), 0);
  EXPECT_EQ(ts.index(Boundary::S, 0), 3);
  EXPECT_EQ(ts.index(Boundary::B, 1), 4);
  for (int i = 0; i < ts.size(); ++i) {
    EXPECT_EQ(ts.index(ts.tag(i)), i);
    EXPECT_EQ(HybridTagSet::boundary_of(i), ts.tag(i).boundary);
  }
  EXPECT_EQ(ts.tag(ts.index(HybridTag{Boundary::E, "nr"})).str(), "E-nr");
  EXPECT_THROW(ts.index(HybridTag{Boundary::B, "zz"}), TagSetError);
  EXPECT_THROW(ts.index(HybridTag{Boundary::B, "_"}), TagSetError);
}

TEST(HybridTag, Parse) {
  auto t = parse_hybrid_tag("B-nr");
  ASSERT_TRUE(t);
  EXPECT_EQ(t->boundary, Boundary::B);
  EXPECT_EQ(t->pos, "nr");
  auto u = parse_hybrid_tag("S-_");
  ASSERT_TRUE(u);
  EXPECT_FALSE(u->known());
  EXPECT_FALSE(parse_hybrid_tag("Q-v"));
  EXPECT_FALSE(parse_hybrid_tag("B-"));
  EXPECT_FALSE(parse_hybrid_tag("Bv"));
  EXPECT_FALSE(parse_hybrid_tag(""));
}

TEST(Transitions, BmesLegality) {
  const HybridTag bn{Boundary::B, "n"}, mn{Boundary::M, "n"}, en{Boundary::E, "n"},
      sn{Boundary::S, "n"}, ev{Boundary::E, "v"}, bv{Boundary::B, "v"}, sv{Boundary::S, "v"};
  EXPECT_TRUE(is_valid_transition(bn, mn));
  EXPECT_TRUE(is_valid_transition(bn, en));
  EXPECT_TRUE(is_valid_transition(mn, mn));
  EXPECT_TRUE(is_valid_transition(en, bv));
  EXPECT_TRUE(is_valid_transition(sn, sv));
  EXPECT_FALSE(is_valid_transition(bn, ev));  // POS changes inside a word
  EXPECT_FALSE(is_valid_transition(bn, bv));
  EXPECT_FALSE(is_valid_transition(bn, sn));
  EXPECT_FALSE(is_valid_transition(en, mn));
  EXPECT_FALSE(is_valid_transition(sn, en));
}

TEST(Segmentation, EncodeExamples) {
  const Segmentation seg{{0, 2, "nr"}, {2, 3, "v"}, {3, 6, "n"}};
  std::vector<std::string> got;
  for (const auto& t : encode_segmentation(seg)) got.push_back(t.str());
  EXPECT_EQ(got, (std::vector<std::string>{"B-nr", "E-nr", "S-v", "B-n", "M-n", "E-n"}));
  EXPECT_THROW(encode_segmentation({{0, 2, "n"}, {3, 4, "v"}}), SegmentationError);
  EXPECT_THROW(encode_segmentation({{0, 0, "n"}}), SegmentationError);
}

TEST(Segmentation, DecodeIsTotal) {
  auto tags = [](std::initializer_list<const char*> xs) {
    std::vector<HybridTag> out;
    for (const char* x : xs) out.push_back(*parse_hybrid_tag(x));
    return out;
  };
  // M with no open word starts one; B closes whatever is open.
  EXPECT_EQ(decode_tags(tags({"M-n", "E-n", "B-v", "B-a", "E-a"})),
            (Segmentation{{0, 2, "n"}, {2, 3, "v"}, {3, 5, "a"}}));
  // A word open at the end is closed there.
  EXPECT_EQ(decode_tags(tags({"S-n", "B-v", "M-v"})), (Segmentation{{0, 1, "n"}, {1, 3, "v"}}));
  // The first character's POS names the word.
  EXPECT_EQ(decode_tags(tags({"B-n", "E-v"})), (Segmentation{{0, 2, "n"}}));
  EXPECT_TRUE(decode_tags(std::vector<HybridTag>{}).empty());
}

TEST(Segmentation, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  const auto pos = PosTagSet::default_set();
  for (int trial = 0; trial < 200; ++trial) {
    Segmentation seg;
    std::size_t at = 0;
    const int words = 1 + static_cast<int>(rng() % 8);
    for (int w = 0; w < words; ++w) {
      const std::size_t len = 1 + rng() % 4;
      seg.push_back({at, at + len, rng() % 5 == 0 ? "_" : pos.tag(static_cast<int>(rng() % 22))});
      at += len;
    }
    EXPECT_EQ(decode_tags(encode_segmentation(seg)), seg);
  }
}

}  // namespace
}  // namespace projtag
