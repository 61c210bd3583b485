#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <random>
#include <sstream>

#include "biomap/seqio.hpp"

using namespace biomap;

namespace {

std::string random_bases(std::mt19937_64& rng, size_t len, bool with_n = false) {
  static const char* alpha = "ACGTN";
  std::uniform_int_distribution<int> pick(0, with_n ? 4 : 3);
  std::string s;
  s.reserve(len);
  for (size_t i = 0; i < len; ++i) s.push_back(alpha[pick(rng)]);
  return s;
}

}  // namespace

TEST_CASE("codewords of proper bases are pairwise 2 bits apart") {
  const Base proper[4] = {Base::A, Base::C, Base::G, Base::T};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const uint8_t a = kBaseCode[static_cast<int>(proper[i])];
      const uint8_t b = kBaseCode[static_cast<int>(proper[j])];
      CHECK(std::popcount(uint8_t(a ^ b)) == 2);
    }
  CHECK(kBaseCode[static_cast<int>(Base::N)] == 0);
}

TEST_CASE("encode/decode roundtrip") {
  std::mt19937_64 rng(7);
  CHECK(encode("").size() == 0);
  CHECK(encode("ACCGCCTA").to_string() == "ACCGCCTA");
  CHECK(encode("acgtn").to_string() == "ACGTN");
  for (int iter = 0; iter < 200; ++iter) {
    const std::string s = random_bases(rng, size_t(rng() % 300), true);
    CHECK(encode(s).to_string() == s);
  }
  CHECK_THROWS_AS(encode("ACGX"), std::invalid_argument);
}

TEST_CASE("packing uses 21 bases per word") {
  EncodedSequence s = encode(std::string(21, 'A'));
  CHECK(s.words().size() == 1);
  s.push_back(Base::C);
  CHECK(s.words().size() == 2);
  CHECK(s.code_at(21) == kBaseCode[static_cast<int>(Base::C)]);
  // Slot 0 of word 0 holds base 0.
  CHECK((s.words()[0] & 0x7) == kBaseCode[static_cast<int>(Base::A)]);
}

TEST_CASE("set_base edits in place") {
  EncodedSequence s = encode("AAAAAAAAAAAAAAAAAAAAAAAAA");  // 25 bases, 2 words
  s.set_base(0, Base::T);
  s.set_base(24, Base::G);
  CHECK(s.to_string() == "TAAAAAAAAAAAAAAAAAAAAAAAG");
  CHECK_THROWS_AS(s.set_base(25, Base::A), std::out_of_range);
}

TEST_CASE("reverse complement of ACCGCCTA is TAGGCGGT") {
  CHECK(reverse_complement(encode("ACCGCCTA")).to_string() == "TAGGCGGT");
}

TEST_CASE("reverse complement is an involution") {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 1000; ++iter) {
    const EncodedSequence s = encode(random_bases(rng, 1 + rng() % 200, true));
    CHECK(reverse_complement(reverse_complement(s)) == s);
  }
  CHECK(reverse_complement(EncodedSequence{}).empty());
  CHECK(reverse_complement(encode("NAN")).to_string() == "NTN");
}

TEST_CASE("bit distance is twice base distance without N") {
  std::mt19937_64 rng(13);
  for (int iter = 0; iter < 500; ++iter) {
    const size_t len = 1 + rng() % 120;
    const EncodedSequence a = encode(random_bases(rng, len));
    const EncodedSequence b = encode(random_bases(rng, len));
    CHECK(bit_mismatches(a, b) == 2 * base_mismatches(a, b));
  }
}

TEST_CASE("base_mismatches basics") {
  CHECK(base_mismatches(encode("ACGT"), encode("ACGT")) == 0);
  CHECK(base_mismatches(encode("ACGT"), encode("TGCA")) == 4);
  CHECK(base_mismatches(encode("ANGT"), encode("ANGT")) == 0);  // N == N
  CHECK(base_mismatches(encode("ANGT"), encode("AAGT")) == 1);  // N != base
  CHECK(base_mismatches(EncodedSequence{}, EncodedSequence{}) == 0);
  CHECK_THROWS_AS(base_mismatches(encode("A"), encode("AA")), std::invalid_argument);
}

TEST_CASE("base_mismatches satisfies the triangle inequality") {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 300; ++iter) {
    const size_t len = 1 + rng() % 60;
    const EncodedSequence a = encode(random_bases(rng, len, true));
    const EncodedSequence b = encode(random_bases(rng, len, true));
    const EncodedSequence c = encode(random_bases(rng, len, true));
    CHECK(base_mismatches(a, c) <= base_mismatches(a, b) + base_mismatches(b, c));
    CHECK(base_mismatches(a, b) == base_mismatches(b, a));
  }
}

TEST_CASE("subseq and contains_n") {
  const EncodedSequence s = encode("ACGTNACGT");
  CHECK(s.subseq(2, 4).to_string() == "GTNA");
  CHECK(s.subseq(0, 0).empty());
  CHECK(s.contains_n(2, 4));
  CHECK_FALSE(s.contains_n(5, 4));
  CHECK_THROWS_AS(s.subseq(6, 4), std::out_of_range);
}

TEST_CASE("fasta parsing") {
  std::istringstream in(
      ">chr1 test contig\r\n"
      "ACGTAC\n"
      "gtac\n"
      "\n"
      ">chr2\n"
      "TTTT\n");
  const Reference ref = parse_fasta(in);
  REQUIRE(ref.contig_count() == 2);
  CHECK(ref.contig(0).name == "chr1");
  CHECK(ref.contig(0).sequence.to_string() == "ACGTACGTAC");
  CHECK(ref.contig(0).flat_offset == 0);
  CHECK(ref.contig(1).name == "chr2");
  CHECK(ref.contig(1).flat_offset == 10);
  CHECK(ref.flat_length() == 14);
  CHECK(ref.flattened().to_string() == "ACGTACGTACTTTT");
  CHECK(ref.window(8, 4).to_string() == "ACTT");  // spans the contig seam
}

TEST_CASE("fasta errors carry line numbers") {
  {
    std::istringstream in("ACGT\n");
    CHECK_THROWS_AS(parse_fasta(in), ParseError);
  }
  {
    std::istringstream in(">c1\nACXT\n");
    CHECK_THROWS_WITH_AS(parse_fasta(in), doctest::Contains("line 2"), ParseError);
  }
  {
    std::istringstream in(">c1\n>c2\nACGT\n");
    CHECK_THROWS_WITH_AS(parse_fasta(in), doctest::Contains("no sequence"), ParseError);
  }
  {
    std::istringstream in("");
    CHECK_THROWS_AS(parse_fasta(in), ParseError);
  }
}

TEST_CASE("fasta writing round-trips through the parser") {
  std::istringstream in(">long desc here\nACGTACGTACGTN\n>short\nTT\n");
  const Reference ref = parse_fasta(in);
  std::ostringstream out;
  write_fasta(out, ref, 5);  // narrow lines to exercise wrapping
  std::istringstream back(out.str());
  const Reference again = parse_fasta(back);
  REQUIRE(again.contig_count() == 2);
  CHECK(again.contig(0).name == ref.contig(0).name);
  CHECK(again.contig(0).sequence == ref.contig(0).sequence);
  CHECK(again.contig(1).sequence == ref.contig(1).sequence);
  CHECK(out.str().find("ACGTA\nCGTAC\nGTN\n") != std::string::npos);
  CHECK_THROWS_AS(write_fasta(out, ref, 0), std::invalid_argument);
}

TEST_CASE("reference coordinate mapping") {
  std::istringstream in(">a\nACGTACGT\n>b\nTTTTT\n");
  const Reference ref = parse_fasta(in);
  CHECK(ref.locate(0) == std::pair<size_t, uint64_t>{0, 0});
  CHECK(ref.locate(7) == std::pair<size_t, uint64_t>{0, 7});
  CHECK(ref.locate(8) == std::pair<size_t, uint64_t>{1, 0});
  CHECK(ref.locate(12) == std::pair<size_t, uint64_t>{1, 4});
  CHECK_THROWS_AS(ref.locate(13), std::out_of_range);
  CHECK(ref.flat_position(1, 2) == 10);
  CHECK_THROWS_AS(ref.flat_position(1, 5), std::out_of_range);
}

TEST_CASE("fastq parsing and spillover writing") {
  std::istringstream in(
      "@r1 left\n"
      "ACGTN\n"
      "+\n"
      "IIIII\n"
      "@r2\n"
      "TTAA\n"
      "+r2\n"
      "@@@@\n");  // quality may legally start with '@'
  const std::vector<Query> qs = parse_fastq(in);
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].id == "r1");
  CHECK(qs[0].sequence.to_string() == "ACGTN");
  CHECK(qs[0].quality == "IIIII");
  CHECK(qs[1].id == "r2");
  CHECK(qs[1].quality == "@@@@");

  std::ostringstream out;
  write_fastq(out, qs[1]);
  std::istringstream back(out.str());
  const std::vector<Query> round = parse_fastq(back);
  REQUIRE(round.size() == 1);
  CHECK(round[0].id == "r2");
  CHECK(round[0].sequence == qs[1].sequence);
  CHECK(round[0].quality == qs[1].quality);
}

TEST_CASE("fastq errors") {
  {
    std::istringstream in("@r1\nACGT\n+\n");
    CHECK_THROWS_WITH_AS(parse_fastq(in), doctest::Contains("truncated"), ParseError);
  }
  {
    std::istringstream in("@r1\nACGT\n+\nIII\n");
    CHECK_THROWS_WITH_AS(parse_fastq(in), doctest::Contains("quality length"), ParseError);
  }
  {
    std::istringstream in("@r1\nACGT\nIIII\nIIII\n");
    CHECK_THROWS_WITH_AS(parse_fastq(in), doctest::Contains("'+'"), ParseError);
  }
  {
    std::istringstream in("r1\nACGT\n+\nIIII\n");
    CHECK_THROWS_AS(parse_fastq(in), ParseError);
  }
  {
    std::istringstream in("");
    CHECK(parse_fastq(in).empty());  // empty read set is not an error
  }
}
