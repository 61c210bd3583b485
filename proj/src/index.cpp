#include "biomap/index.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace biomap {

namespace {

constexpr char kMagic[4] = {'B', 'M', 'A', 'P'};
constexpr uint32_t kFormatVersion = 1;
constexpr unsigned kMaxBuildSeed = 15;
constexpr unsigned kMaxSizeSeed = 30;  // 4^31 * 8 no longer fits in 64 bits

uint32_t bits_for(uint64_t dimension) {
  return dimension <= 1 ? 0 : std::bit_width(dimension - 1);
}

uint16_t chip_of(uint32_t array_no, uint16_t chips) {
  return chips <= 1 ? 0 : uint16_t(array_no % chips);
}

// ---- little-endian file primitives ----

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = (value >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw ParseError(std::string("index file truncated reading ") + what);
  T value = 0;
  for (size_t i = 0; i < sizeof(T); ++i) value |= T(buf[i]) << (8 * i);
  return value;
}

}  // namespace

PackedWidths packed_widths(const TcamGeometry& g) {
  g.validate();
  PackedWidths w;
  w.array_bits = bits_for(g.arrays);
  w.row_bits = bits_for(g.rows_per_array);
  w.col_bits = bits_for(g.cols_per_row);
  if (w.total() > 32)
    throw std::invalid_argument("packed_widths: geometry needs more than 32 bits per entry");
  return w;
}

uint32_t pack_entry(const PmiEntry& e, const TcamGeometry& g) {
  const PackedWidths w = packed_widths(g);
  if (e.array_no >= g.arrays || e.row_no >= g.rows_per_array || e.col_no >= g.cols_per_row)
    throw std::invalid_argument("pack_entry: coordinate outside geometry");
  // 64-bit intermediates: a single dimension may use all 32 bits.
  const uint64_t packed = (uint64_t(e.array_no) << (w.row_bits + w.col_bits)) |
                          (uint64_t(e.row_no) << w.col_bits) | e.col_no;
  return static_cast<uint32_t>(packed);
}

PmiEntry unpack_entry(uint32_t packed, const TcamGeometry& g) {
  const PackedWidths w = packed_widths(g);
  const uint64_t v = packed;
  PmiEntry e;
  e.col_no = static_cast<uint32_t>(v & ((uint64_t(1) << w.col_bits) - 1));
  e.row_no = static_cast<uint32_t>((v >> w.col_bits) & ((uint64_t(1) << w.row_bits) - 1));
  e.array_no = static_cast<uint32_t>(v >> (w.row_bits + w.col_bits));
  return e;
}

uint64_t prefix_rank(const EncodedSequence& prefix) {
  uint64_t rank = 0;
  for (size_t i = 0; i < prefix.size(); ++i) {
    const Base b = prefix.base_at(i);
    if (b == Base::N) throw std::invalid_argument("prefix_rank: N has no rank");
    rank = rank * 4 + static_cast<uint64_t>(b);
  }
  return rank;
}

PmiTables build_pmi_tables(const Reference& ref, unsigned seed,
                           const TcamLayout& layout, unsigned chips) {
  if (seed < 1 || seed > kMaxBuildSeed)
    throw std::invalid_argument("build_pmi_tables: seed must be in 1..15");
  if (chips < 1 || chips > UINT16_MAX)
    throw std::invalid_argument("build_pmi_tables: chips must be in 1..65535");
  if (layout.reference_length() != ref.flat_length())
    throw std::invalid_argument("build_pmi_tables: layout does not match reference");

  PmiTables t;
  t.seed = uint8_t(seed);
  t.chips = uint16_t(chips);
  t.geometry = layout.geometry();
  packed_widths(t.geometry);  // fail early if entries cannot pack
  t.pmitil.assign(uint64_t(1) << (2 * seed), PmitilEntry{});

  const EncodedSequence& flat = ref.flattened();
  const uint64_t len = flat.size();
  std::vector<std::pair<uint64_t, uint32_t>> keyed;  // (prefix rank, packed entry)
  if (len >= seed) {
    keyed.reserve(len - seed + 1);
    for (uint64_t p = 0; p + seed <= len; ++p) {
      uint64_t rank = 0;
      bool has_n = false;
      for (unsigned i = 0; i < seed; ++i) {
        const Base b = flat.base_at(p + i);
        if (b == Base::N) {
          has_n = true;
          break;
        }
        rank = rank * 4 + static_cast<uint64_t>(b);
      }
      if (has_n) continue;  // windows containing N never anchor
      keyed.emplace_back(rank, pack_entry(layout.coordinates_of(p), t.geometry));
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  t.pmit.reserve(keyed.size());
  for (const auto& [rank, packed] : keyed) {
    PmitilEntry& slot = t.pmitil[rank];
    if (slot.count == 0) slot.start = t.pmit.size();
    ++slot.count;
    t.pmit.push_back(packed);
  }
  return reorder_entries(std::move(t));
}

const PmitilEntry& lookup_range(const PmiTables& tables, const EncodedSequence& prefix) {
  if (prefix.size() != tables.seed)
    throw std::invalid_argument("lookup: prefix length differs from the table seed");
  if (prefix.contains_n(0, prefix.size()))
    throw std::invalid_argument("lookup: prefix contains N");
  return tables.pmitil[prefix_rank(prefix)];
}

std::vector<PmiEntry> lookup(const PmiTables& tables, const EncodedSequence& prefix) {
  const PmitilEntry& range = lookup_range(tables, prefix);
  std::vector<PmiEntry> out;
  out.reserve(range.count);
  for (uint64_t i = 0; i < range.count; ++i)
    out.push_back(unpack_entry(tables.pmit[range.start + i], tables.geometry));
  return out;
}

PmiTables reorder_entries(PmiTables tables) {
  const TcamGeometry& g = tables.geometry;
  std::vector<uint32_t> scratch;
  uint16_t desired_chip = 0;
  for (PmitilEntry& range : tables.pmitil) {
    if (range.count <= 1) {
      if (range.count == 1)
        desired_chip = uint16_t(
            (chip_of(unpack_entry(tables.pmit[range.start], g).array_no, tables.chips) + 1) %
            std::max<uint16_t>(1, tables.chips));
      continue;
    }
    // Group the slice by array (first-appearance order preserved), then emit
    // groups preferring the chip the previous burst did not use.
    const uint64_t begin = range.start, end = range.start + range.count;
    std::vector<uint32_t> arrays;             // first-appearance order
    std::vector<std::vector<uint32_t>> groups;  // packed entries per array
    for (uint64_t i = begin; i < end; ++i) {
      const uint32_t packed = tables.pmit[i];
      const uint32_t array_no = unpack_entry(packed, g).array_no;
      size_t gi = 0;
      while (gi < arrays.size() && arrays[gi] != array_no) ++gi;
      if (gi == arrays.size()) {
        arrays.push_back(array_no);
        groups.emplace_back();
      }
      groups[gi].push_back(packed);
    }
    scratch.clear();
    std::vector<bool> used(groups.size(), false);
    for (size_t emitted = 0; emitted < groups.size(); ++emitted) {
      size_t pick = groups.size();
      for (size_t gi = 0; gi < groups.size(); ++gi) {
        if (used[gi]) continue;
        if (pick == groups.size()) pick = gi;  // fallback: first remaining
        if (chip_of(arrays[gi], tables.chips) == desired_chip) {
          pick = gi;
          break;
        }
      }
      used[pick] = true;
      scratch.insert(scratch.end(), groups[pick].begin(), groups[pick].end());
      desired_chip = uint16_t((chip_of(arrays[pick], tables.chips) + 1) %
                              std::max<uint16_t>(1, tables.chips));
    }
    std::copy(scratch.begin(), scratch.end(), tables.pmit.begin() + begin);
  }
  return tables;
}

std::vector<EncodedSequence> seed_deviations(const EncodedSequence& prefix, unsigned d) {
  if (d != 1)
    throw std::invalid_argument("seed_deviations: only single-base deviations are supported");
  if (prefix.empty()) throw std::invalid_argument("seed_deviations: empty prefix");
  if (prefix.contains_n(0, prefix.size()))
    throw std::invalid_argument("seed_deviations: prefix contains N");
  std::vector<EncodedSequence> out;
  out.reserve(3 * prefix.size());
  for (size_t i = 0; i < prefix.size(); ++i) {
    const Base original = prefix.base_at(i);
    for (Base b : {Base::A, Base::C, Base::G, Base::T}) {
      if (b == original) continue;
      EncodedSequence dev = prefix;
      dev.set_base(i, b);
      out.push_back(std::move(dev));
    }
  }
  return out;
}

uint64_t pmitil_size_bytes(unsigned seed) {
  if (seed < 1) throw std::invalid_argument("pmitil_size_bytes: seed must be >= 1");
  if (seed > kMaxSizeSeed)
    throw std::invalid_argument("pmitil_size_bytes: size overflows 64 bits");
  return (uint64_t(1) << (2 * seed)) * 8;
}

void save_index(const PmiTables& tables, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_index: cannot open " + path + " for writing");
  out.write(kMagic, 4);
  write_le<uint32_t>(out, kFormatVersion);
  write_le<uint8_t>(out, tables.seed);
  write_le<uint16_t>(out, tables.chips);
  write_le<uint32_t>(out, tables.geometry.arrays);
  write_le<uint32_t>(out, tables.geometry.rows_per_array);
  write_le<uint32_t>(out, tables.geometry.cols_per_row);
  for (const PmitilEntry& e : tables.pmitil) {
    write_le<uint64_t>(out, e.start);
    write_le<uint64_t>(out, e.count);
  }
  write_le<uint64_t>(out, tables.pmit.size());
  for (uint32_t packed : tables.pmit) write_le<uint32_t>(out, packed);
  out.flush();
  if (!out) throw std::runtime_error("save_index: write failed on " + path);
}

PmiTables load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_index: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("load_index: bad magic (not an index file)");
  const uint32_t version = read_le<uint32_t>(in, "version");
  if (version != kFormatVersion)
    throw ParseError("load_index: unsupported format version " + std::to_string(version));

  PmiTables t;
  t.seed = read_le<uint8_t>(in, "seed");
  if (t.seed < 1 || t.seed > kMaxBuildSeed)
    throw ParseError("load_index: seed out of range");
  t.chips = read_le<uint16_t>(in, "chips");
  if (t.chips < 1) throw ParseError("load_index: chips must be >= 1");
  t.geometry.arrays = read_le<uint32_t>(in, "geometry");
  t.geometry.rows_per_array = read_le<uint32_t>(in, "geometry");
  t.geometry.cols_per_row = read_le<uint32_t>(in, "geometry");
  try {
    packed_widths(t.geometry);  // also validates the geometry itself
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("load_index: ") + e.what());
  }

  const uint64_t slots = uint64_t(1) << (2 * t.seed);
  t.pmitil.resize(slots);
  for (uint64_t i = 0; i < slots; ++i) {
    t.pmitil[i].start = read_le<uint64_t>(in, "pmitil");
    t.pmitil[i].count = read_le<uint64_t>(in, "pmitil");
  }
  const uint64_t entries = read_le<uint64_t>(in, "entry count");
  if (entries > t.geometry.capacity_bases())
    throw ParseError("load_index: entry count exceeds geometry capacity");
  t.pmit.resize(entries);
  for (uint64_t i = 0; i < entries; ++i) t.pmit[i] = read_le<uint32_t>(in, "pmit");

  uint64_t total = 0;
  for (const PmitilEntry& e : t.pmitil) {
    if (e.count > 0 && (e.start > entries || e.count > entries - e.start))
      throw ParseError("load_index: locator slice out of bounds");
    total += e.count;
  }
  if (total != entries)
    throw ParseError("load_index: locator counts disagree with the entry list");
  return t;
}

PmiTables load_index(const std::string& path, const TcamGeometry& expected) {
  PmiTables t = load_index(path);
  if (!(t.geometry == expected))
    throw std::runtime_error("load_index: index geometry differs from the layout");
  return t;
}

}  // namespace biomap
