#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "biomap/tcam.hpp"

using namespace biomap;

namespace {

Reference make_ref(const std::string& bases) {
  Reference ref;
  ref.add_contig("c", encode(bases));
  return ref;
}

std::string random_bases(std::mt19937_64& rng, size_t len) {
  static const char* alpha = "ACGT";
  std::string s;
  s.reserve(len);
  for (size_t i = 0; i < len; ++i) s.push_back(alpha[rng() % 4]);
  return s;
}

TcamGeometry geom(uint32_t arrays, uint32_t rows, uint32_t cols) {
  TcamGeometry g;
  g.arrays = arrays;
  g.rows_per_array = rows;
  g.cols_per_row = cols;
  return g;
}

}  // namespace

TEST_CASE("geometry validation and capacity") {
  CHECK_THROWS_AS(geom(0, 3, 4).validate(), std::invalid_argument);
  CHECK_THROWS_AS(geom(1, 1, 4).validate(), std::invalid_argument);
  CHECK_THROWS_AS(geom(1, 3, 0).validate(), std::invalid_argument);
  const TcamGeometry g = geom(2, 3, 4);
  CHECK(g.genuine_rows() == 2);
  CHECK(g.bases_per_array() == 8);
  CHECK(g.capacity_bases() == 16);
  CHECK(g.row_bits() == 12);
}

TEST_CASE("fit_geometry picks the smallest covering array count") {
  CHECK(fit_geometry(16, 3, 4).arrays == 2);
  CHECK(fit_geometry(17, 3, 4).arrays == 3);
  CHECK(fit_geometry(0, 3, 4).arrays == 1);
  CHECK(fit_geometry(1, 3, 4).arrays == 1);
}

TEST_CASE("layout fills genuine rows consecutively and pads the tail") {
  // 13 bases in 2 arrays of 2 genuine rows x 4 cols (capacity 16).
  const Reference ref = make_ref("ACGTACGTACGTA");
  const TcamLayout layout = layout_reference(ref, geom(2, 3, 4));

  CHECK(layout.reference_length() == 13);
  // Array 0 genuine rows: bases 0..3, 4..7.
  for (uint32_t c = 0; c < 4; ++c) {
    CHECK(layout.cell(0, 0, c) == cell_from_base(ref.flattened().base_at(c)));
    CHECK(layout.cell(0, 1, c) == cell_from_base(ref.flattened().base_at(4 + c)));
  }
  // Array 1 row 1 holds bases 12.. with pad after position 12.
  CHECK(layout.cell(1, 1, 0) == cell_from_base(Base::A));
  CHECK(layout.cell(1, 1, 1) == kCellPad);
  CHECK(layout.cell(1, 1, 3) == kCellPad);
}

TEST_CASE("each array's last row duplicates the next array's first row") {
  std::mt19937_64 rng(31);
  const Reference ref = make_ref(random_bases(rng, 100));
  const TcamLayout layout = layout_reference(ref, geom(5, 4, 9));  // 5*3*9 = 135 >= 100
  for (uint32_t a = 0; a + 1 < 5; ++a) {
    const auto last = layout.row(a, 3);
    const auto next_first = layout.row(a + 1, 0);
    REQUIRE(last.size() == next_first.size());
    for (size_t c = 0; c < last.size(); ++c) CHECK(last[c] == next_first[c]);
  }
  // Final array's boundary row has no successor: all pad.
  for (Cell c : layout.row(4, 3)) CHECK(c == kCellPad);
}

TEST_CASE("reading genuine rows back reconstructs the reference") {
  std::mt19937_64 rng(37);
  const std::string bases = random_bases(rng, 61);
  const TcamLayout layout = layout_reference(make_ref(bases), geom(3, 4, 8));
  std::string rebuilt;
  for (uint32_t a = 0; a < 3 && rebuilt.size() < bases.size(); ++a)
    for (uint32_t r = 0; r + 1 < 4 && rebuilt.size() < bases.size(); ++r)
      for (Cell c : layout.row(a, r)) {
        if (rebuilt.size() == bases.size()) break;
        REQUIRE(c <= 4);
        rebuilt.push_back(base_to_char(static_cast<Base>(c)));
      }
  CHECK(rebuilt == bases);
}

TEST_CASE("empty reference lays out as all pad") {
  const Reference ref;  // no contigs
  const TcamLayout layout = layout_reference(ref, geom(1, 3, 4));
  for (uint32_t r = 0; r < 3; ++r)
    for (Cell c : layout.row(0, r)) CHECK(c == kCellPad);
  CHECK_THROWS_AS(layout.coordinates_of(0), std::out_of_range);
}

TEST_CASE("capacity check rejects too-small geometries") {
  CHECK_THROWS_AS(layout_reference(make_ref("ACGTACGTACGTACGTA"), geom(2, 3, 4)),
                  std::invalid_argument);
}

TEST_CASE("coordinate arithmetic") {
  const Reference ref = make_ref("ACGTACGTACGTA");  // 13 bases
  const TcamLayout layout = layout_reference(ref, geom(2, 3, 4));
  CHECK(layout.coordinates_of(0) == TcamCoord{0, 0, 0});
  // 4 bases/row, 2 genuine rows/array: position 9 = array 1, row 0, col 1.
  CHECK(layout.coordinates_of(9) == TcamCoord{1, 0, 1});
  for (uint64_t p = 0; p < 13; ++p) CHECK(layout.position_of(layout.coordinates_of(p)) == p);
  CHECK_THROWS_AS(layout.coordinates_of(13), std::out_of_range);
  CHECK_THROWS_AS(layout.position_of(TcamCoord{0, 2, 0}), std::out_of_range);  // boundary row
  CHECK_THROWS_AS(layout.position_of(TcamCoord{1, 1, 1}), std::out_of_range);  // pad cell
  CHECK_THROWS_AS(layout.position_of(TcamCoord{2, 0, 0}), std::out_of_range);
}

TEST_CASE("coordinates never land on a boundary row") {
  std::mt19937_64 rng(41);
  const TcamLayout layout = layout_reference(make_ref(random_bases(rng, 200)), geom(9, 4, 8));
  for (uint64_t p = 0; p < 200; ++p)
    CHECK(layout.coordinates_of(p).row_no < 3);
}

TEST_CASE("full-row search at an exact window") {
  std::mt19937_64 rng(43);
  const std::string bases = random_bases(rng, 64);
  const Reference ref = make_ref(bases);
  const TcamLayout layout = layout_reference(ref, geom(2, 5, 8));
  const EncodedSequence q = ref.window(17, 6);
  const MatchOutcome m = search_at(layout, q, layout.coordinates_of(17), 0);
  CHECK(m.matched);
  CHECK(m.mismatches == 0);
  CHECK(m.search_steps == 1);
  CHECK_FALSE(m.fragmented);
  CHECK(m.flat_position == 17);
}

TEST_CASE("substitutions count against the tolerance") {
  const Reference ref = make_ref("AAAAAAAAAAAAAAAA");
  const TcamLayout layout = layout_reference(ref, geom(2, 3, 4));
  EncodedSequence q = encode("AAAA");
  q.set_base(2, Base::G);
  const TcamCoord anchor = layout.coordinates_of(0);
  CHECK(search_at(layout, q, anchor, 1).matched);
  CHECK(search_at(layout, q, anchor, 1).mismatches == 1);
  CHECK_FALSE(search_at(layout, q, anchor, 0).matched);
}

TEST_CASE("N and pad always mismatch in the search path") {
  const Reference ref = make_ref("ANGT");
  const TcamLayout layout = layout_reference(ref, geom(1, 2, 8));
  // Query N against stored N: still a mismatch (unlike base_mismatches).
  CHECK(base_mismatches(encode("ANGT"), ref.window(0, 4)) == 0);
  CHECK(search_at(layout, encode("ANGT"), {0, 0, 0}, 4).mismatches == 1);
  // Query running past the reference end hits pad cells.
  const MatchOutcome m = search_at(layout, encode("ANGTAA"), {0, 0, 0}, 6);
  CHECK(m.mismatches == 3);  // N cell + two pad cells
}

TEST_CASE("fragmented search continues in the next row of the same array") {
  std::mt19937_64 rng(47);
  const std::string bases = random_bases(rng, 64);
  const Reference ref = make_ref(bases);
  const TcamLayout layout = layout_reference(ref, geom(2, 5, 8));
  // Anchor at col 5 of row 0: 8-base query spills 5 bases into row 1.
  const EncodedSequence q = ref.window(5, 8);
  const MatchOutcome m = search_at(layout, q, layout.coordinates_of(5), 0);
  CHECK(m.matched);
  CHECK(m.mismatches == 0);
  CHECK(m.fragmented);
  CHECK(m.search_steps == 2);
}

TEST_CASE("fragmented search crosses array boundaries via the duplicated row") {
  std::mt19937_64 rng(53);
  const std::string bases = random_bases(rng, 64);
  const Reference ref = make_ref(bases);
  const TcamLayout layout = layout_reference(ref, geom(2, 5, 8));
  // Array 0 holds bases 0..31; anchor at position 30 (last genuine row, col 6).
  const TcamCoord anchor = layout.coordinates_of(30);
  CHECK(anchor == TcamCoord{0, 3, 6});
  const EncodedSequence q = ref.window(30, 7);
  const MatchOutcome m = search_at(layout, q, anchor, 0);
  CHECK(m.matched);
  CHECK(m.fragmented);
  CHECK(m.mismatches == 0);
}

TEST_CASE("fragmentation transparency: anchor placement does not change the count") {
  std::mt19937_64 rng(59);
  const std::string bases = random_bases(rng, 400);
  const Reference ref = make_ref(bases);
  const TcamLayout layout = layout_reference(ref, geom(5, 6, 20));
  for (int iter = 0; iter < 300; ++iter) {
    const size_t qlen = 8 + rng() % 12;
    const uint64_t pos = rng() % (400 - qlen);
    EncodedSequence q = ref.window(pos, qlen);
    // Corrupt a few bases so counts are non-trivial.
    for (int k = rng() % 3; k > 0; --k)
      q.set_base(rng() % qlen, static_cast<Base>(rng() % 4));
    const MatchOutcome m = search_at(layout, q, layout.coordinates_of(pos), 1000);
    CHECK(m.mismatches == base_mismatches(q, ref.window(pos, qlen)));
  }
}

TEST_CASE("query length limits") {
  const Reference ref = make_ref("ACGTACGTACGTACGT");
  const TcamLayout layout = layout_reference(ref, geom(2, 3, 4));
  CHECK_THROWS_AS(search_at(layout, encode("ACGTA"), {0, 0, 0}, 10),
                  std::invalid_argument);
  CHECK_THROWS_AS(search_at(layout, EncodedSequence{}, {0, 0, 0}, 10),
                  std::invalid_argument);
}

TEST_CASE("analog sensing agrees with the digital verdict under zero variation") {
  ResistanceModel model;
  model.sd_r_high = 0.0;
  model.sd_r_low = 0.0;
  std::mt19937_64 rng(61);
  const std::string bases = random_bases(rng, 64);
  const Reference ref = make_ref(bases);
  const TcamLayout layout = layout_reference(ref, geom(2, 5, 8));
  const SenseThreshold threshold =
      calibrate_threshold(2, layout.geometry().row_bits(), model, 100000);

  std::mt19937_64 sense_rng(7);
  AnalogSense analog{&threshold, &model, &sense_rng};
  for (int iter = 0; iter < 200; ++iter) {
    const size_t qlen = 4 + rng() % 5;
    const uint64_t pos = rng() % (64 - qlen);
    EncodedSequence q = ref.window(pos, qlen);
    for (int k = rng() % 4; k > 0; --k)
      q.set_base(rng() % qlen, static_cast<Base>(rng() % 4));
    const TcamCoord anchor = layout.coordinates_of(pos);
    const MatchOutcome digital = search_at(layout, q, anchor, 2);
    const MatchOutcome sensed = search_at(layout, q, anchor, 2, &analog);
    CHECK(sensed.mismatches == digital.mismatches);
    if (digital.search_steps == 1) {
      // Single-row windows: zero-variation sensing equals digital counting.
      CHECK(sensed.matched == digital.matched);
    }
  }
}

TEST_CASE("analog sensing is per step: a fragmented window may carry 2t") {
  ResistanceModel model;
  model.sd_r_high = 0.0;
  model.sd_r_low = 0.0;
  const Reference ref = make_ref("AAAAAAAAAAAAAAAA");
  const TcamLayout layout = layout_reference(ref, geom(2, 3, 4));
  const SenseThreshold threshold =
      calibrate_threshold(1, layout.geometry().row_bits(), model, 100000);
  std::mt19937_64 rng(3);
  AnalogSense analog{&threshold, &model, &rng};
  // Anchor at col 2: "AG|GA" puts one mismatch in each of the two steps.
  EncodedSequence q = encode("AGGA");
  const MatchOutcome m = search_at(layout, q, {0, 0, 2}, 1, &analog);
  CHECK(m.fragmented);
  CHECK(m.mismatches == 2);   // over the digital tolerance of 1
  CHECK(m.matched);           // but each row individually senses 1 <= t
  CHECK_FALSE(search_at(layout, q, {0, 0, 2}, 1).matched);
  // Geometry mismatch in the injection is rejected.
  SenseThreshold wrong = threshold;
  wrong.row_bits = 64;
  AnalogSense bad{&wrong, &model, &rng};
  CHECK_THROWS_AS(search_at(layout, q, {0, 0, 2}, 1, &bad), std::invalid_argument);
}
