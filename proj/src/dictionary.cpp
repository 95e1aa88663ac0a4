#include "baca/dictionary.hpp"

#include <algorithm>
#include <cmath>

#include "baca/error.hpp"

namespace baca {

std::string_view to_string(Polarity p) { return p == Polarity::id ? "id" : "ood"; }
std::string_view to_string(TailMode m) { return m == TailMode::boundary ? "boundary" : "extreme"; }
std::string_view to_string(Origin o) { return o == Origin::real ? "real" : "synthetic"; }

TailMode parse_tail_mode(std::string_view s) {
  if (s == "boundary") return TailMode::boundary;
  if (s == "extreme") return TailMode::extreme;
  throw ValidationError("unknown tail mode: " + std::string(s));
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

BoundaryDict::BoundaryDict(Polarity polarity, std::size_t capacity, std::size_t bank_capacity,
                           TailMode mode)
    : polarity_(polarity), mode_(mode), capacity_(capacity), bank_capacity_(bank_capacity) {
  heap_.reserve(capacity);
}

bool BoundaryDict::front_before(const DictEntry& a, const DictEntry& b) const {
  ++comparisons_;
  const bool keep_high = (polarity_ == Polarity::id) == (mode_ == TailMode::boundary);
  return keep_high ? a.score < b.score : a.score > b.score;
}

bool BoundaryDict::keep_new(double offered, double front_score) const {
  ++comparisons_;
  const bool keep_high = (polarity_ == Polarity::id) == (mode_ == TailMode::boundary);
  return keep_high ? offered > front_score : offered < front_score;
}

bool BoundaryDict::try_insert(DictEntry entry) {
  if (!entry.key.allFinite() || !std::isfinite(entry.score)) {
    throw ValidationError("dictionary entry must have a finite key and score");
  }
  if (capacity_ == 0) return false;
  // std heaps keep the comparator-largest element on top; invert so the top is the front.
  auto heap_less = [this](const DictEntry& a, const DictEntry& b) { return front_before(b, a); };
  if (heap_.size() < capacity_) {
    entry.seq = next_seq_++;
    heap_.push_back(std::move(entry));
    std::push_heap(heap_.begin(), heap_.end(), heap_less);
    return true;
  }
  if (!keep_new(entry.score, heap_.front().score)) return false;
  std::pop_heap(heap_.begin(), heap_.end(), heap_less);
  entry.seq = next_seq_++;
  heap_.back() = std::move(entry);
  std::push_heap(heap_.begin(), heap_.end(), heap_less);
  return true;
}

void BoundaryDict::freeze_memory_bank(std::vector<DictEntry> entries) {
  if (bank_frozen_) throw ValidationError("memory bank already frozen");
  if (entries.size() > bank_capacity_) {
    throw ValidationError("memory bank overflow: " + std::to_string(entries.size()) + " > " +
                          std::to_string(bank_capacity_));
  }
  for (auto& e : entries) {
    if (!e.key.allFinite() || !std::isfinite(e.score)) {
      throw ValidationError("dictionary entry must have a finite key and score");
    }
    e.seq = next_seq_++;
  }
  bank_ = std::move(entries);
  bank_frozen_ = true;
}

const DictEntry& BoundaryDict::front() const {
  if (heap_.empty()) throw ValidationError("front() on an empty queue");
  return heap_.front();
}

std::vector<DictEntry> BoundaryDict::queue_entries() const {
  std::vector<DictEntry> out = heap_;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
  return out;
}

std::vector<const DictEntry*> BoundaryDict::all_entries() const {
  std::vector<const DictEntry*> out;
  out.reserve(total_size());
  for (const auto& e : bank_) out.push_back(&e);
  for (const auto& e : heap_) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->seq < b->seq; });
  return out;
}

std::vector<const DictEntry*> BoundaryDict::topk_entries(const Embedding& q, std::size_t k,
                                                         std::optional<std::uint64_t> exclude) const {
  if (k == 0) throw ValidationError("topk: k must be >= 1");
  if (empty()) throw ValidationError("topk on an empty dictionary");
  struct Scored {
    double cos;
    const DictEntry* entry;
  };
  std::vector<Scored> scored;
  scored.reserve(total_size());
  for (const DictEntry* e : all_entries()) {
    if (exclude && e->seq == *exclude) continue;
    if (e->key.size() != q.size()) throw ValidationError("topk: key/query dimension mismatch");
    scored.push_back({cosine_similarity(e->key, q), e});
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const Scored& a, const Scored& b) {
                      if (a.cos != b.cos) return a.cos > b.cos;
                      return a.entry->seq < b.entry->seq;
                    });
  std::vector<const DictEntry*> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(scored[i].entry);
  return out;
}

std::vector<Embedding> BoundaryDict::topk_by_cosine(const Embedding& q, std::size_t k) const {
  std::vector<Embedding> out;
  for (const DictEntry* e : topk_entries(q, k)) out.push_back(e->key);
  return out;
}

nlohmann::json BoundaryDict::to_json() const {
  auto entry_json = [](const DictEntry& e, bool in_bank) {
    nlohmann::json key = nlohmann::json::array();
    for (Eigen::Index i = 0; i < e.key.size(); ++i) key.push_back(e.key(i));
    return nlohmann::json{{"seq", e.seq},
                          {"score", e.score},
                          {"origin", std::string(to_string(e.origin))},
                          {"store", in_bank ? "bank" : "queue"},
                          {"key", std::move(key)}};
  };
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : bank_) entries.push_back(entry_json(e, true));
  for (const auto& e : queue_entries()) entries.push_back(entry_json(e, false));
  return nlohmann::json{{"polarity", std::string(to_string(polarity_))},
                        {"tail_mode", std::string(to_string(mode_))},
                        {"capacity", capacity_},
                        {"bank_capacity", bank_capacity_},
                        {"entries", std::move(entries)}};
}

}  // namespace baca
