#include "biomap/seqio.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>

namespace biomap {

namespace {

// Cell code -> base, for the five codes that can legally appear in a word.
constexpr Base kCodeToBase[8] = {
    Base::N,  // 000
    Base::T,  // 001
    Base::G,  // 010
    Base::N,  // 011 (unused)
    Base::C,  // 100
    Base::N,  // 101 (unused)
    Base::N,  // 110 (unused)
    Base::A,  // 111
};

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

Base base_from_char(char c) {
  switch (c) {
    case 'A': case 'a': return Base::A;
    case 'C': case 'c': return Base::C;
    case 'G': case 'g': return Base::G;
    case 'T': case 't': return Base::T;
    case 'N': case 'n': return Base::N;
    default:
      throw std::invalid_argument(std::string("invalid base character '") + c + "'");
  }
}

char base_to_char(Base b) {
  static constexpr char kChars[5] = {'A', 'C', 'G', 'T', 'N'};
  return kChars[static_cast<uint8_t>(b)];
}

Base complement(Base b) {
  switch (b) {
    case Base::A: return Base::T;
    case Base::T: return Base::A;
    case Base::C: return Base::G;
    case Base::G: return Base::C;
    default: return Base::N;
  }
}

void EncodedSequence::push_back(Base b) {
  const size_t slot = size_ % kBasesPerWord;
  if (slot == 0) words_.push_back(0);
  words_.back() |= uint64_t(kBaseCode[static_cast<uint8_t>(b)]) << (3 * slot);
  ++size_;
}

Base EncodedSequence::base_at(size_t i) const {
  return kCodeToBase[code_at(i)];
}

uint8_t EncodedSequence::code_at(size_t i) const {
  if (i >= size_) throw std::out_of_range("EncodedSequence::code_at");
  return (words_[i / kBasesPerWord] >> (3 * (i % kBasesPerWord))) & 0x7;
}

void EncodedSequence::set_base(size_t i, Base b) {
  if (i >= size_) throw std::out_of_range("EncodedSequence::set_base");
  uint64_t& w = words_[i / kBasesPerWord];
  const size_t shift = 3 * (i % kBasesPerWord);
  w = (w & ~(uint64_t(0x7) << shift)) |
      (uint64_t(kBaseCode[static_cast<uint8_t>(b)]) << shift);
}

EncodedSequence EncodedSequence::subseq(size_t pos, size_t len) const {
  if (pos + len > size_) throw std::out_of_range("EncodedSequence::subseq");
  EncodedSequence out;
  for (size_t i = 0; i < len; ++i) out.push_back(base_at(pos + i));
  return out;
}

std::string EncodedSequence::to_string() const {
  std::string s;
  s.reserve(size_);
  for (size_t i = 0; i < size_; ++i) s.push_back(base_to_char(base_at(i)));
  return s;
}

bool EncodedSequence::contains_n(size_t pos, size_t len) const {
  if (pos + len > size_) throw std::out_of_range("EncodedSequence::contains_n");
  for (size_t i = 0; i < len; ++i)
    if (code_at(pos + i) == 0) return true;
  return false;
}

EncodedSequence encode(std::string_view bases) {
  EncodedSequence out;
  for (char c : bases) out.push_back(base_from_char(c));
  return out;
}

EncodedSequence reverse_complement(const EncodedSequence& s) {
  EncodedSequence out;
  for (size_t i = s.size(); i > 0; --i) out.push_back(complement(s.base_at(i - 1)));
  return out;
}

size_t base_mismatches(const EncodedSequence& a, const EncodedSequence& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("base_mismatches: length mismatch");
  size_t count = 0;
  const auto& wa = a.words();
  const auto& wb = b.words();
  for (size_t w = 0; w < wa.size(); ++w) {
    if (wa[w] == wb[w]) continue;  // 21 identical bases at once
    const size_t lo = w * 21;
    const size_t hi = std::min(lo + 21, a.size());
    for (size_t i = lo; i < hi; ++i)
      if (a.code_at(i) != b.code_at(i)) ++count;
  }
  return count;
}

size_t bit_mismatches(const EncodedSequence& a, const EncodedSequence& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("bit_mismatches: length mismatch");
  size_t count = 0;
  const auto& wa = a.words();
  const auto& wb = b.words();
  for (size_t w = 0; w < wa.size(); ++w)
    count += std::popcount(wa[w] ^ wb[w]);
  return count;
}

void Reference::add_contig(std::string name, EncodedSequence seq) {
  if (seq.empty()) throw std::invalid_argument("add_contig: empty sequence");
  Contig c;
  c.name = std::move(name);
  c.flat_offset = flat_.size();
  for (size_t i = 0; i < seq.size(); ++i) flat_.push_back(seq.base_at(i));
  c.sequence = std::move(seq);
  contigs_.push_back(std::move(c));
}

EncodedSequence Reference::window(uint64_t flat_pos, size_t len) const {
  return flat_.subseq(flat_pos, len);
}

std::pair<size_t, uint64_t> Reference::locate(uint64_t flat_pos) const {
  if (flat_pos >= flat_.size()) throw std::out_of_range("Reference::locate");
  // Last contig whose flat_offset <= flat_pos.
  size_t lo = 0, hi = contigs_.size();
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (contigs_[mid].flat_offset <= flat_pos) lo = mid;
    else hi = mid;
  }
  return {lo, flat_pos - contigs_[lo].flat_offset};
}

uint64_t Reference::flat_position(size_t contig_idx, uint64_t offset) const {
  const Contig& c = contigs_.at(contig_idx);
  if (offset >= c.sequence.size())
    throw std::out_of_range("Reference::flat_position: offset past contig end");
  return c.flat_offset + offset;
}

Reference parse_fasta(std::istream& in) {
  Reference ref;
  std::string line;
  std::string name;
  EncodedSequence seq;
  size_t lineno = 0;
  bool have_record = false;

  auto flush = [&]() {
    if (!have_record) return;
    if (seq.empty())
      throw ParseError("fasta: record '" + name + "' has no sequence");
    ref.add_contig(std::move(name), std::move(seq));
    name.clear();
    seq = EncodedSequence();
  };

  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush();
      const size_t end = line.find_first_of(" \t", 1);
      name = line.substr(1, end == std::string::npos ? end : end - 1);
      if (name.empty())
        throw ParseError("fasta line " + std::to_string(lineno) + ": empty record name");
      have_record = true;
    } else {
      if (!have_record)
        throw ParseError("fasta line " + std::to_string(lineno) +
                         ": sequence data before first header");
      try {
        for (char c : line) seq.push_back(base_from_char(c));
      } catch (const std::invalid_argument& e) {
        throw ParseError("fasta line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  flush();
  if (ref.contig_count() == 0) throw ParseError("fasta: no records found");
  return ref;
}

void write_fasta(std::ostream& out, const Reference& ref, size_t line_width) {
  if (line_width == 0) throw std::invalid_argument("write_fasta: zero line width");
  for (size_t c = 0; c < ref.contig_count(); ++c) {
    const Contig& contig = ref.contig(c);
    out << '>' << contig.name << '\n';
    const std::string bases = contig.sequence.to_string();
    for (size_t i = 0; i < bases.size(); i += line_width)
      out << bases.substr(i, line_width) << '\n';
  }
}

std::vector<Query> parse_fastq(std::istream& in) {
  std::vector<Query> out;
  std::string header, bases, plus, qual;
  size_t lineno = 0;

  while (std::getline(in, header)) {
    ++lineno;
    header = strip_cr(std::move(header));
    if (header.empty()) continue;  // tolerate blank separator lines
    const size_t header_line = lineno;
    if (header[0] != '@')
      throw ParseError("fastq line " + std::to_string(lineno) +
                       ": expected '@' record header");
    if (!std::getline(in, bases) || !std::getline(in, plus) || !std::getline(in, qual))
      throw ParseError("fastq: truncated record starting at line " +
                       std::to_string(header_line));
    lineno += 3;
    bases = strip_cr(std::move(bases));
    plus = strip_cr(std::move(plus));
    qual = strip_cr(std::move(qual));

    if (plus.empty() || plus[0] != '+')
      throw ParseError("fastq line " + std::to_string(header_line + 2) +
                       ": expected '+' separator");
    if (bases.empty())
      throw ParseError("fastq line " + std::to_string(header_line + 1) +
                       ": empty sequence");
    if (bases.size() != qual.size())
      throw ParseError("fastq line " + std::to_string(header_line + 3) +
                       ": quality length differs from sequence length");

    Query q;
    const size_t end = header.find_first_of(" \t", 1);
    q.id = header.substr(1, end == std::string::npos ? end : end - 1);
    if (q.id.empty())
      throw ParseError("fastq line " + std::to_string(header_line) + ": empty read id");
    try {
      q.sequence = encode(bases);
    } catch (const std::invalid_argument& e) {
      throw ParseError("fastq line " + std::to_string(header_line + 1) + ": " + e.what());
    }
    q.quality = std::move(qual);
    out.push_back(std::move(q));
  }
  return out;
}

void write_fastq(std::ostream& out, const Query& q) {
  out << '@' << q.id << '\n' << q.sequence.to_string() << '\n' << "+\n";
  if (q.quality.size() == q.sequence.size()) out << q.quality;
  else out << std::string(q.sequence.size(), 'I');
  out << '\n';
}

}  // namespace biomap
