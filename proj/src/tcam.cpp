#include "biomap/tcam.hpp"

#include <stdexcept>

namespace biomap {

namespace {

// Digital cell comparison: pad never matches, and N on either side is always
// a mismatch (a search for any base against a stored N fails, and N in the
// query matches nothing). Contrast with base_mismatches, where N == N compares
// equal: the search path models hardware cells, not symbol equality.
bool cell_matches(Cell cell, Base query_base) {
  return cell <= 3 && query_base != Base::N && cell == cell_from_base(query_base);
}

}  // namespace

void TcamGeometry::validate() const {
  if (arrays == 0) throw std::invalid_argument("geometry: arrays must be positive");
  if (rows_per_array < 2)
    throw std::invalid_argument(
        "geometry: need at least 2 rows per array (one is the boundary row)");
  if (cols_per_row == 0)
    throw std::invalid_argument("geometry: cols_per_row must be positive");
}

TcamGeometry fit_geometry(uint64_t ref_len, uint32_t rows_per_array,
                          uint32_t cols_per_row) {
  TcamGeometry g;
  g.rows_per_array = rows_per_array;
  g.cols_per_row = cols_per_row;
  g.arrays = 1;
  g.validate();
  const uint64_t per_array = g.bases_per_array();
  const uint64_t needed = (ref_len + per_array - 1) / per_array;
  if (needed > UINT32_MAX) throw std::invalid_argument("fit_geometry: reference too large");
  g.arrays = std::max<uint64_t>(1, needed);
  return g;
}

TcamLayout::TcamLayout(const Reference& ref, const TcamGeometry& geometry)
    : geom_(geometry), ref_len_(ref.flat_length()) {
  geom_.validate();
  if (geom_.capacity_bases() < ref_len_)
    throw std::invalid_argument("layout_reference: geometry capacity below reference length");

  const EncodedSequence& flat = ref.flattened();
  cells_.assign(uint64_t(geom_.arrays) * geom_.rows_per_array * geom_.cols_per_row,
                kCellPad);
  const uint64_t bpa = geom_.bases_per_array();
  for (uint32_t a = 0; a < geom_.arrays; ++a) {
    for (uint32_t r = 0; r < geom_.rows_per_array; ++r) {
      // Genuine rows hold this array's slice; the last row duplicates the
      // next array's row 0, which is simply the next slice in flat order.
      const bool boundary = (r == geom_.rows_per_array - 1);
      const uint64_t base_pos =
          boundary ? (a + 1) * bpa : a * bpa + uint64_t(r) * geom_.cols_per_row;
      Cell* out = &cells_[(uint64_t(a) * geom_.rows_per_array + r) * geom_.cols_per_row];
      for (uint32_t c = 0; c < geom_.cols_per_row; ++c) {
        const uint64_t p = base_pos + c;
        if (p < ref_len_) out[c] = cell_from_base(flat.base_at(p));
      }
    }
  }
}

Cell TcamLayout::cell(uint32_t array_no, uint32_t row_no, uint32_t col_no) const {
  if (array_no >= geom_.arrays || row_no >= geom_.rows_per_array ||
      col_no >= geom_.cols_per_row)
    throw std::out_of_range("TcamLayout::cell");
  return cells_[(uint64_t(array_no) * geom_.rows_per_array + row_no) * geom_.cols_per_row +
                col_no];
}

std::span<const Cell> TcamLayout::row(uint32_t array_no, uint32_t row_no) const {
  if (array_no >= geom_.arrays || row_no >= geom_.rows_per_array)
    throw std::out_of_range("TcamLayout::row");
  const uint64_t off =
      (uint64_t(array_no) * geom_.rows_per_array + row_no) * geom_.cols_per_row;
  return {cells_.data() + off, geom_.cols_per_row};
}

TcamCoord TcamLayout::coordinates_of(uint64_t flat_position) const {
  if (flat_position >= ref_len_)
    throw std::out_of_range("coordinates_of: position past reference end");
  const uint64_t bpa = geom_.bases_per_array();
  TcamCoord c;
  c.array_no = static_cast<uint32_t>(flat_position / bpa);
  const uint64_t rem = flat_position % bpa;
  c.row_no = static_cast<uint32_t>(rem / geom_.cols_per_row);
  c.col_no = static_cast<uint32_t>(rem % geom_.cols_per_row);
  return c;
}

uint64_t TcamLayout::position_of(const TcamCoord& c) const {
  if (c.array_no >= geom_.arrays || c.row_no + 1 >= geom_.rows_per_array ||
      c.col_no >= geom_.cols_per_row)
    throw std::out_of_range("position_of: not a genuine coordinate");
  const uint64_t p = c.array_no * geom_.bases_per_array() +
                     uint64_t(c.row_no) * geom_.cols_per_row + c.col_no;
  if (p >= ref_len_) throw std::out_of_range("position_of: pad cell");
  return p;
}

TcamLayout layout_reference(const Reference& ref, const TcamGeometry& geometry) {
  return TcamLayout(ref, geometry);
}

MatchOutcome search_at(const TcamLayout& layout, const EncodedSequence& query,
                       const TcamCoord& anchor, uint32_t tolerance,
                       const AnalogSense* analog) {
  const TcamGeometry& g = layout.geometry();
  if (query.empty()) throw std::invalid_argument("search_at: empty query");
  if (query.size() > g.cols_per_row)
    throw std::invalid_argument("search_at: query longer than one full row");
  if (analog &&
      (!analog->threshold || !analog->model || !analog->rng ||
       analog->threshold->row_bits != g.row_bits()))
    throw std::invalid_argument("search_at: analog sense not set up for this geometry");

  MatchOutcome out;
  out.flat_position = layout.position_of(anchor);  // validates the anchor

  const size_t head_len = std::min<size_t>(query.size(), g.cols_per_row - anchor.col_no);
  uint32_t head_mm = 0;
  {
    const std::span<const Cell> row = layout.row(anchor.array_no, anchor.row_no);
    for (size_t i = 0; i < head_len; ++i)
      if (!cell_matches(row[anchor.col_no + i], query.base_at(i))) ++head_mm;
  }

  uint32_t tail_mm = 0;
  if (head_len < query.size()) {
    out.fragmented = true;
    out.search_steps = 2;
    // Tail continues in the next row in sequence. At the end of the array's
    // genuine rows this is the duplicated boundary row, whose contents equal
    // the next array's row 0 (or pad past the final array / reference end).
    const uint32_t tail_row = anchor.row_no + 1;  // boundary row included
    const std::span<const Cell> row = layout.row(anchor.array_no, tail_row);
    for (size_t i = head_len; i < query.size(); ++i)
      if (!cell_matches(row[i - head_len], query.base_at(i))) ++tail_mm;
  }

  out.mismatches = head_mm + tail_mm;
  if (analog) {
    // Each step senses its own row's match line: 2 low bit-cells per base
    // mismatch against the full row width.
    bool ok = sense_row(2 * head_mm, *analog->threshold, *analog->model, *analog->rng);
    if (ok && out.search_steps == 2)
      ok = sense_row(2 * tail_mm, *analog->threshold, *analog->model, *analog->rng);
    out.matched = ok;
  } else {
    out.matched = out.mismatches <= tolerance;
  }
  return out;
}

}  // namespace biomap
