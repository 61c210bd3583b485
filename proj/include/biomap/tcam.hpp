#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "biomap/seqio.hpp"
#include "biomap/sensing.hpp"

namespace biomap {

struct TcamGeometry {
  uint32_t arrays = 0;
  uint32_t rows_per_array = 0;  // includes the duplicated boundary row
  uint32_t cols_per_row = 0;    // bases; a row is 3x this many bit-cells

  void validate() const;  // arrays > 0, rows_per_array >= 2, cols_per_row > 0

  uint32_t genuine_rows() const { return rows_per_array - 1; }
  uint64_t bases_per_array() const { return uint64_t(genuine_rows()) * cols_per_row; }
  uint64_t capacity_bases() const { return bases_per_array() * arrays; }
  uint32_t row_bits() const { return cols_per_row * 3; }

  friend bool operator==(const TcamGeometry&, const TcamGeometry&) = default;
};

/// Smallest geometry with the given row shape that holds `ref_len` bases.
TcamGeometry fit_geometry(uint64_t ref_len, uint32_t rows_per_array, uint32_t cols_per_row);

/// Array/row/column address of one base cell. Only genuine rows
/// (0 .. rows_per_array-2) are addressable; the last row of each array is a
/// read-only duplicate of the next array's row 0.
struct TcamCoord {
  uint32_t array_no = 0;
  uint32_t row_no = 0;
  uint32_t col_no = 0;
  friend bool operator==(const TcamCoord&, const TcamCoord&) = default;
};

// A cell holds one of the five base states or pad. Pad fills cells past the
// end of the reference; it never matches a queried base and never anchors.
using Cell = uint8_t;
inline constexpr Cell kCellPad = 5;
inline Cell cell_from_base(Base b) { return static_cast<Cell>(b); }

/// The reference genome laid into search arrays: genuine rows filled
/// consecutively, plus each array's last row bit-exactly duplicating the next
/// array's first row so that a query window spanning an array boundary can
/// still be matched with a two-step search inside one array.
class TcamLayout {
 public:
  TcamLayout(const Reference& ref, const TcamGeometry& geometry);

  const TcamGeometry& geometry() const { return geom_; }
  uint64_t reference_length() const { return ref_len_; }

  Cell cell(uint32_t array_no, uint32_t row_no, uint32_t col_no) const;
  std::span<const Cell> row(uint32_t array_no, uint32_t row_no) const;

  /// Genuine-cell address of a reference position; never a boundary row.
  TcamCoord coordinates_of(uint64_t flat_position) const;
  /// Inverse of coordinates_of; rejects boundary rows, pad and out-of-range.
  uint64_t position_of(const TcamCoord& c) const;

 private:
  TcamGeometry geom_;
  uint64_t ref_len_ = 0;
  std::vector<Cell> cells_;  // arrays * rows * cols, row-major
};

TcamLayout layout_reference(const Reference& ref, const TcamGeometry& geometry);

struct MatchOutcome {
  bool matched = false;
  uint64_t flat_position = 0;  // reference index of query base 0
  uint32_t mismatches = 0;     // digital base-mismatch count (always exact)
  bool fragmented = false;
  uint32_t search_steps = 1;   // 2 when the window spills into the next row
};

/// Optional analog sensing injection for search_at. When present, each search
/// step senses its row's effective resistance against the calibrated
/// threshold instead of comparing the digital count to the tolerance, so
/// matches may carry more mismatches than the tolerance (overshoot). The
/// digital count in the outcome stays exact either way.
struct AnalogSense {
  const SenseThreshold* threshold = nullptr;
  const ResistanceModel* model = nullptr;
  std::mt19937_64* rng = nullptr;
};

/// Anchored similarity search. The query's base 0 is aligned at the anchor
/// cell; if the window runs past the end of the row, the tail is matched in a
/// second step against the next row in sequence (the within-array successor),
/// or the duplicated boundary row when the anchor row is the array's last
/// genuine row. Mismatches accumulate across both steps. Pad cells and N (on
/// either side) always count as mismatches.
MatchOutcome search_at(const TcamLayout& layout, const EncodedSequence& query,
                       const TcamCoord& anchor, uint32_t tolerance,
                       const AnalogSense* analog = nullptr);

}  // namespace biomap
