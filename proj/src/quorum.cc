#include "trackscope/quorum.h"

#include <string>

#include "trackscope/error.h"
#include "trackscope/md5_hash.h"

namespace trackscope {
namespace {

constexpr std::int64_t kMsPerDay = 24LL * 60 * 60 * 1000;

void split_tokens(std::string_view text, std::string_view separators,
                  const QuorumConfig& config, std::vector<UrlToken>& out) {
  while (!text.empty()) {
    const auto end = text.find_first_of(separators);
    std::string_view part = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{}
                                         : text.substr(end + 1);
    if (part.empty()) continue;
    UrlToken token;
    if (const auto eq = part.find('='); eq != std::string_view::npos) {
      token.key = std::string(part.substr(0, eq));
      token.value = std::string(part.substr(eq + 1));
    } else {
      token.key = "_";
      token.value = std::string(part);
    }
    if (static_cast<int>(token.value.size()) < config.min_value_length)
      continue;
    out.push_back(std::move(token));
  }
}

}  // namespace

void QuorumConfig::validate() const {
  if (k < 2) throw Error(ErrorCode::kConfigError, "quorum k must be >= 2");
  if (min_value_length < 1)
    throw Error(ErrorCode::kConfigError, "min_value_length must be >= 1");
  if (window_days < 1)
    throw Error(ErrorCode::kConfigError, "quorum window must be >= 1 day");
}

std::vector<UrlToken> extract_tokens(const ParsedUrl& url,
                                     const QuorumConfig& config) {
  std::vector<UrlToken> tokens;
  split_tokens(url.query, "&", config, tokens);
  split_tokens(url.parameter_string, ";&", config, tokens);
  return tokens;
}

QuorumStore::QuorumStore(QuorumConfig config) : config_(config) {
  config_.validate();
}

void QuorumStore::observe(std::string_view key, std::string_view value,
                          std::string_view observer_id) {
  observe_digest(key, hash_truncated(value), observer_id);
}

void QuorumStore::observe_digest(std::string_view key,
                                 std::string_view value_digest,
                                 std::string_view observer_id) {
  auto it = entries_.find(Key{std::string(key), std::string(value_digest)});
  if (it == entries_.end())
    it = entries_
             .emplace(Key{std::string(key), std::string(value_digest)},
                      Entry{})
             .first;
  it->second.observers.insert(hash_truncated(observer_id));
}

std::size_t QuorumStore::cardinality_of_digest(
    std::string_view key, std::string_view value_digest) const {
  const auto it = entries_.find(Key{std::string(key), std::string(value_digest)});
  return it == entries_.end() ? 0 : it->second.cardinality();
}

std::size_t QuorumStore::cardinality(std::string_view key,
                                     std::string_view value) const {
  return cardinality_of_digest(key, hash_truncated(value));
}

bool QuorumStore::is_safe(std::string_view key, std::string_view value) const {
  return cardinality(key, value) >= static_cast<std::size_t>(config_.k);
}

void QuorumStore::advance_to(std::int64_t timestamp_ms) {
  const std::int64_t index =
      timestamp_ms / (kMsPerDay * static_cast<std::int64_t>(config_.window_days));
  if (index > window_index_) {
    if (window_index_ >= 0) entries_.clear();
    window_index_ = index;
  }
}

void QuorumStore::export_csv(std::ostream& out) const {
  out << "key,value_digest,cardinality\n";
  for (const auto& [key, entry] : entries_)
    out << key.first << ',' << key.second << ',' << entry.cardinality() << '\n';
}

QuorumStore QuorumStore::import_csv(std::istream& in, QuorumConfig config) {
  QuorumStore store(config);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (number == 1 && line.starts_with("key,"))) continue;
    const auto last = line.rfind(',');
    const auto first = line.rfind(',', last == 0 ? 0 : last - 1);
    if (last == std::string::npos || first == std::string::npos ||
        first == last)
      throw Error(ErrorCode::kParseError,
                  "quorum csv line " + std::to_string(number));
    std::size_t count = 0;
    try {
      count = std::stoul(line.substr(last + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError,
                  "quorum csv line " + std::to_string(number) +
                      ": bad cardinality");
    }
    Entry& entry = store.entries_[Key{line.substr(0, first),
                                      line.substr(first + 1, last - first - 1)}];
    entry.imported += count;
  }
  return store;
}

bool is_safe(const QuorumStore& store, std::string_view key,
             std::string_view value) {
  return store.is_safe(key, value);
}

bool classify_request(const ParsedUrl& url, const QuorumStore& store) {
  for (const auto& token : extract_tokens(url, store.config()))
    if (!store.is_safe(token.key, token.value)) return true;
  return false;
}

}  // namespace trackscope
