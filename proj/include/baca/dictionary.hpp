#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "baca/encoder.hpp"

namespace baca {

enum class Polarity { id, ood };
enum class TailMode { boundary, extreme };
enum class Origin { real, synthetic };

std::string_view to_string(Polarity p);
std::string_view to_string(TailMode m);
std::string_view to_string(Origin o);
TailMode parse_tail_mode(std::string_view s);

struct DictEntry {
  Embedding key;
  double score = 0.0;  // pretrain score of the graph that produced the key
  Origin origin = Origin::real;
  std::uint64_t seq = 0;  // assigned by the dictionary; insertion order
};

/// Fixed-capacity score-ordered queue plus a frozen memory bank.
///
/// Boundary mode keeps the entries nearest the ID/OOD score boundary: an
/// ID-polarity dictionary keeps the `capacity` highest-score entries it has
/// been offered, an OOD-polarity dictionary the `capacity` lowest. Extreme
/// mode keeps the opposite tails. The heap front is always the entry that the
/// next accepted offer evicts, so an offer costs O(log capacity).
class BoundaryDict {
 public:
  BoundaryDict(Polarity polarity, std::size_t capacity, std::size_t bank_capacity,
               TailMode mode = TailMode::boundary);

  // Returns true when the entry was stored (possibly evicting the front).
  bool try_insert(DictEntry entry);

  void freeze_memory_bank(std::vector<DictEntry> entries);
  bool bank_frozen() const noexcept { return bank_frozen_; }
  // Sequence number the next stored entry will receive.
  std::uint64_t next_seq() const noexcept { return next_seq_; }

  // Keys with the k largest cosine similarities to q over queue and bank,
  // most similar first; ties go to the older entry. Entries whose seq equals
  // `exclude` are skipped.
  std::vector<const DictEntry*> topk_entries(const Embedding& q, std::size_t k,
                                             std::optional<std::uint64_t> exclude = {}) const;
  std::vector<Embedding> topk_by_cosine(const Embedding& q, std::size_t k) const;

  Polarity polarity() const noexcept { return polarity_; }
  TailMode tail_mode() const noexcept { return mode_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t bank_capacity() const noexcept { return bank_capacity_; }
  std::size_t queue_size() const noexcept { return heap_.size(); }
  std::size_t total_size() const noexcept { return heap_.size() + bank_.size(); }
  bool empty() const noexcept { return total_size() == 0; }

  // Front of the queue: the entry evicted by the next accepted offer.
  const DictEntry& front() const;
  std::vector<DictEntry> queue_entries() const;  // sorted by seq
  const std::vector<DictEntry>& bank() const noexcept { return bank_; }
  std::vector<const DictEntry*> all_entries() const;  // bank then queue, by seq

  // Score comparisons performed by queue maintenance since construction.
  std::uint64_t comparisons() const noexcept { return comparisons_; }

  nlohmann::json to_json() const;

 private:
  // True when a should sit closer to the heap front than b.
  bool front_before(const DictEntry& a, const DictEntry& b) const;
  bool keep_new(double offered, double front_score) const;

  Polarity polarity_;
  TailMode mode_;
  std::size_t capacity_;
  std::size_t bank_capacity_;
  std::vector<DictEntry> heap_;
  std::vector<DictEntry> bank_;
  bool bank_frozen_ = false;
  std::uint64_t next_seq_ = 0;
  mutable std::uint64_t comparisons_ = 0;
};

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace baca
