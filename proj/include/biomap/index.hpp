#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biomap/seqio.hpp"
#include "biomap/tcam.hpp"

namespace biomap {

/// One seed-prefix occurrence: the array/row/column cell where the occurrence
/// starts. Always a genuine (non-boundary) coordinate.
using PmiEntry = TcamCoord;

struct PmitilEntry {
  uint64_t start = 0;  // index into the packed occurrence list
  uint64_t count = 0;  // 0 = prefix never occurs
  friend bool operator==(const PmitilEntry&, const PmitilEntry&) = default;
};

/// Bit widths used to pack a PmiEntry into 32 bits: ceil(log2) of each
/// geometry dimension, array in the high bits, then row, then column.
struct PackedWidths {
  uint32_t array_bits = 0;
  uint32_t row_bits = 0;
  uint32_t col_bits = 0;
  uint32_t total() const { return array_bits + row_bits + col_bits; }
};

PackedWidths packed_widths(const TcamGeometry& g);  // rejects layouts needing > 32 bits
uint32_t pack_entry(const PmiEntry& e, const TcamGeometry& g);
PmiEntry unpack_entry(uint32_t packed, const TcamGeometry& g);

/// The search-space pruning tables. The locator (one dense slot per possible
/// seed prefix, 4^seed of them) maps a prefix to a contiguous slice of the
/// occurrence list; occurrences are kept packed at 32 bits each.
struct PmiTables {
  uint8_t seed = 0;
  uint16_t chips = 1;             // occurrence list is interleaved across these
  TcamGeometry geometry;
  std::vector<PmitilEntry> pmitil;  // 4^seed entries, dense
  std::vector<uint32_t> pmit;       // packed PmiEntry, grouped by prefix
};

/// Rank of an N-free sequence in lexicographic A<C<G<T order, 2 bits/base.
uint64_t prefix_rank(const EncodedSequence& prefix);

/// Scans every anchorable reference position (windows containing N are not
/// anchorable) and files its coordinate under its seed prefix, then applies
/// the access-order rules of reorder_entries. Seed is capped at 15.
PmiTables build_pmi_tables(const Reference& ref, unsigned seed,
                           const TcamLayout& layout, unsigned chips);

/// The locator slot for a prefix, without decoding occurrences.
const PmitilEntry& lookup_range(const PmiTables& tables, const EncodedSequence& prefix);

/// All occurrences of a prefix, decoded, in stored order.
std::vector<PmiEntry> lookup(const PmiTables& tables, const EncodedSequence& prefix);

/// Rewrites each prefix's slice so that entries sharing an array are
/// contiguous (one fetch burst per array) and consecutive bursts prefer
/// alternating chips round-robin (chip = array_no mod chips), including
/// across prefix-range boundaries. Pure permutation within each range.
PmiTables reorder_entries(PmiTables tables);

/// All 3*length prefixes at base distance exactly 1 from the input; used to
/// re-probe the filter when the query's own prefix may carry an error.
std::vector<EncodedSequence> seed_deviations(const EncodedSequence& prefix, unsigned d = 1);

/// Locator capacity in bytes: 4^seed slots at 8 bytes of addressing math
/// per slot (the figure the capacity table is quoted in).
uint64_t pmitil_size_bytes(unsigned seed);

void save_index(const PmiTables& tables, const std::string& path);
PmiTables load_index(const std::string& path);
PmiTables load_index(const std::string& path, const TcamGeometry& expected);

}  // namespace biomap
