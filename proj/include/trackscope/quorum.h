#ifndef TRACKSCOPE_QUORUM_H_
#define TRACKSCOPE_QUORUM_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trackscope/url.h"

namespace trackscope {

// k-anonymity test for URL-borne values: a value is safe to treat as
// non-identifying once at least k distinct observers have seen it (the
// current observer counts towards k).
struct QuorumConfig {
  int k = 5;
  int min_value_length = 1;
  int window_days = 30;

  void validate() const;
};

struct UrlToken {
  std::string key;
  std::string value;

  bool operator==(const UrlToken&) const = default;
};

// Key/value pairs from the query and parameter strings. Bare tokens get key
// "_"; values shorter than min_value_length are dropped.
std::vector<UrlToken> extract_tokens(const ParsedUrl& url,
                                     const QuorumConfig& config = {});

// Distinct-observer counts keyed by (key, digest(value)). Only digests are
// ever stored; observer ids are digested too.
class QuorumStore {
 public:
  explicit QuorumStore(QuorumConfig config = {});

  const QuorumConfig& config() const { return config_; }

  void observe(std::string_view key, std::string_view value,
               std::string_view observer_id);
  void observe_digest(std::string_view key, std::string_view value_digest,
                      std::string_view observer_id);

  std::size_t cardinality(std::string_view key, std::string_view value) const;
  std::size_t cardinality_of_digest(std::string_view key,
                                    std::string_view value_digest) const;
  bool is_safe(std::string_view key, std::string_view value) const;

  std::size_t entry_count() const { return entries_.size(); }

  // Window bookkeeping: observations older than the window are dropped when
  // an observation for a later window arrives.
  void advance_to(std::int64_t timestamp_ms);
  std::int64_t window_index() const { return window_index_; }

  // CSV "key,value_digest,cardinality" in key order. Imported rows become a
  // floor for the cardinality; new observers add on top.
  void export_csv(std::ostream& out) const;
  static QuorumStore import_csv(std::istream& in, QuorumConfig config = {});

 private:
  struct Entry {
    std::size_t imported = 0;
    std::set<std::string> observers;
    std::size_t cardinality() const { return imported + observers.size(); }
  };

  using Key = std::pair<std::string, std::string>;

  QuorumConfig config_;
  std::map<Key, Entry, std::less<>> entries_;
  std::int64_t window_index_ = -1;
};

bool is_safe(const QuorumStore& store, std::string_view key,
             std::string_view value);

// True iff any extracted token is unsafe.
bool classify_request(const ParsedUrl& url, const QuorumStore& store);

}  // namespace trackscope

#endif  // TRACKSCOPE_QUORUM_H_
