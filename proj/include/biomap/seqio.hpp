#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace biomap {

// Thrown for malformed input files; the message carries the line number.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

enum class Base : uint8_t { A = 0, C = 1, G = 2, T = 3, N = 4 };

// Three-bit cell codes. Every pair of distinct {A,C,G,T} codes differs in
// exactly two bits, so the bit-level Hamming distance between two N-free
// sequences is always twice their base-level distance. N is all-zeros and
// deliberately breaks the equidistance property (it is never a match).
inline constexpr uint8_t kBaseCode[5] = {0b111, 0b100, 0b010, 0b001, 0b000};

Base base_from_char(char c);          // accepts acgtnACGTN, throws otherwise
char base_to_char(Base b);
Base complement(Base b);              // A<->T, C<->G, N->N

/// DNA sequence packed at 3 bits per base, 21 bases per 64-bit word.
class EncodedSequence {
 public:
  EncodedSequence() = default;

  size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  void push_back(Base b);
  Base base_at(size_t i) const;
  uint8_t code_at(size_t i) const;    // raw 3-bit cell code
  void set_base(size_t i, Base b);

  EncodedSequence subseq(size_t pos, size_t len) const;
  std::string to_string() const;
  bool contains_n(size_t pos, size_t len) const;

  const std::vector<uint64_t>& words() const { return words_; }

  friend bool operator==(const EncodedSequence& a, const EncodedSequence& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

 private:
  static constexpr size_t kBasesPerWord = 21;  // 63 of 64 bits used
  std::vector<uint64_t> words_;
  size_t size_ = 0;
};

EncodedSequence encode(std::string_view bases);  // throws on invalid characters
EncodedSequence reverse_complement(const EncodedSequence& s);

/// Base-level Hamming distance; operands must have equal length.
/// N compares equal to N and unequal to every proper base.
size_t base_mismatches(const EncodedSequence& a, const EncodedSequence& b);

/// Bit-level Hamming distance over the packed cell codes.
size_t bit_mismatches(const EncodedSequence& a, const EncodedSequence& b);

struct Contig {
  std::string name;
  EncodedSequence sequence;
  uint64_t flat_offset = 0;  // position of base 0 in the concatenated genome
};

/// A reference genome: named contigs plus their concatenation, which is what
/// gets laid out across the search arrays. Coordinates reported to the user
/// are contig-relative; internal anchors are offsets into the concatenation.
class Reference {
 public:
  void add_contig(std::string name, EncodedSequence seq);

  size_t contig_count() const { return contigs_.size(); }
  const Contig& contig(size_t i) const { return contigs_.at(i); }
  uint64_t flat_length() const { return flat_.size(); }
  const EncodedSequence& flattened() const { return flat_; }

  EncodedSequence window(uint64_t flat_pos, size_t len) const;

  /// Flat position -> (contig index, offset within contig).
  std::pair<size_t, uint64_t> locate(uint64_t flat_pos) const;
  uint64_t flat_position(size_t contig_idx, uint64_t offset) const;

 private:
  std::vector<Contig> contigs_;
  EncodedSequence flat_;
};

struct Query {
  std::string id;
  EncodedSequence sequence;
  std::string quality;  // kept verbatim so unmapped reads can be re-emitted
};

Reference parse_fasta(std::istream& in);
void write_fasta(std::ostream& out, const Reference& ref, size_t line_width = 70);
std::vector<Query> parse_fastq(std::istream& in);
void write_fastq(std::ostream& out, const Query& q);

}  // namespace biomap
