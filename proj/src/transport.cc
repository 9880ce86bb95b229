#include "trackscope/transport.h"

#include <sodium.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

#include "json.hpp"
#include "trackscope/error.h"
#include "trackscope/md5_hash.h"

namespace trackscope {
namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) throw std::runtime_error("libsodium initialization failed");
}

// Heap comparator: smallest (dispatch_time, sequence) on top.
template <typename T>
bool later(const T& a, const T& b) {
  if (a.dispatch_time != b.dispatch_time)
    return a.dispatch_time > b.dispatch_time;
  return a.sequence > b.sequence;
}

}  // namespace

SecretBoxScheme::SecretBoxScheme(const std::array<std::uint8_t, kKeySize>& key)
    : key_(key) {
  ensure_sodium();
  static_assert(kKeySize == crypto_secretbox_KEYBYTES);
}

SecretBoxScheme SecretBoxScheme::from_seed(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5eed5eed5eed5eedULL);
  std::array<std::uint8_t, kKeySize> key{};
  for (auto& b : key) b = static_cast<std::uint8_t>(rng());
  return SecretBoxScheme(key);
}

std::size_t SecretBoxScheme::nonce_size() const {
  return crypto_secretbox_NONCEBYTES;
}

Bytes SecretBoxScheme::seal(std::span<const std::uint8_t> plaintext,
                            std::span<const std::uint8_t> nonce) const {
  if (nonce.size() != crypto_secretbox_NONCEBYTES)
    throw std::invalid_argument("bad nonce size");
  Bytes out(nonce.size() + crypto_secretbox_MACBYTES + plaintext.size());
  std::copy(nonce.begin(), nonce.end(), out.begin());
  crypto_secretbox_easy(out.data() + nonce.size(), plaintext.data(),
                        plaintext.size(), nonce.data(), key_.data());
  return out;
}

Bytes SecretBoxScheme::open(std::span<const std::uint8_t> envelope) const {
  const std::size_t header = crypto_secretbox_NONCEBYTES;
  if (envelope.size() < header + crypto_secretbox_MACBYTES)
    throw std::runtime_error("envelope too short");
  Bytes plain(envelope.size() - header - crypto_secretbox_MACBYTES);
  if (crypto_secretbox_open_easy(plain.data(), envelope.data() + header,
                                 envelope.size() - header, envelope.data(),
                                 key_.data()) != 0)
    throw std::runtime_error("envelope failed authentication");
  return plain;
}

SealedMessage Sealer::seal(std::string_view payload, std::int64_t send_time,
                           std::mt19937_64& nonce_rng) const {
  Bytes nonce(scheme_->nonce_size());
  for (auto& b : nonce) b = static_cast<std::uint8_t>(nonce_rng());
  SealedMessage message;
  message.envelope = scheme_->seal(
      std::span(reinterpret_cast<const std::uint8_t*>(payload.data()),
                payload.size()),
      nonce);
  message.send_time = send_time;
  return message;
}

SealedMessage Sealer::seal(const SanitizedPageLoad& payload,
                           std::int64_t send_time,
                           std::mt19937_64& nonce_rng) const {
  return seal(serialize_sanitized(payload), send_time, nonce_rng);
}

std::string Collector::unseal(const SealedMessage& message) const {
  const Bytes plain = scheme_->open(message.envelope);
  return std::string(plain.begin(), plain.end());
}

int route(const SealedMessage& message, int proxy_count) {
  if (proxy_count < 1) throw Error(ErrorCode::kConfigError, "proxy_count must be >= 1");
  const auto digest = md5(std::string_view(
      reinterpret_cast<const char*>(message.envelope.data()),
      message.envelope.size()));
  std::uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h = (h << 8) | digest[i];
  return static_cast<int>(h % static_cast<std::uint64_t>(proxy_count));
}

ClientChannel::ClientChannel(std::string source_id, std::int64_t delay_min_ms,
                             std::int64_t delay_max_ms, std::uint64_t rng_seed)
    : source_id_(std::move(source_id)),
      delay_min_(delay_min_ms),
      delay_max_(delay_max_ms),
      rng_(rng_seed) {
  if (delay_min_ < 0 || delay_max_ < delay_min_)
    throw Error(ErrorCode::kConfigError, "invalid delay window");
}

void ClientChannel::send(const Sealer& sealer, std::string_view payload,
                         std::int64_t send_time) {
  enqueue(sealer.seal(payload, send_time, rng_));
}

void ClientChannel::enqueue(SealedMessage message) {
  std::uniform_int_distribution<std::int64_t> delay(delay_min_, delay_max_);
  const std::int64_t when = message.send_time + delay(rng_);
  pending_.push_back({when, next_sequence_++, std::move(message)});
  std::push_heap(pending_.begin(), pending_.end(), later<Pending>);
}

std::vector<SealedMessage> ClientChannel::dispatch(std::int64_t now) {
  std::vector<SealedMessage> out;
  while (!pending_.empty() && pending_.front().dispatch_time <= now) {
    std::pop_heap(pending_.begin(), pending_.end(), later<Pending>);
    out.push_back(std::move(pending_.back().message));
    pending_.pop_back();
  }
  return out;
}

std::int64_t ClientChannel::next_dispatch_time() const {
  return pending_.empty() ? std::numeric_limits<std::int64_t>::max()
                          : pending_.front().dispatch_time;
}

SealedMessage Proxy::receive(std::string_view source_id, SealedMessage message,
                             std::int64_t now) {
  log_.push_back({std::string(source_id), message.envelope.size(), now});
  message.proxy_index = index_;
  return message;
}

void TransportConfig::validate() const {
  if (clients < 1) throw Error(ErrorCode::kConfigError, "clients must be >= 1");
  if (proxies < 1) throw Error(ErrorCode::kConfigError, "proxies must be >= 1");
  if (delay_min_ms < 0 || delay_max_ms < delay_min_ms)
    throw Error(ErrorCode::kConfigError, "invalid delay window");
}

SimulationResult run_simulation(const TransportConfig& config,
                                const std::vector<OutgoingMessage>& messages) {
  config.validate();
  auto scheme = std::make_shared<const SecretBoxScheme>(
      SecretBoxScheme::from_seed(config.seed));
  const Sealer sealer(scheme);
  const Collector collector(scheme);

  std::vector<ClientChannel> clients;
  clients.reserve(config.clients);
  for (int i = 0; i < config.clients; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 seeder(seq);
    clients.emplace_back("client-" + std::to_string(i), config.delay_min_ms,
                         config.delay_max_ms, seeder());
  }
  for (const auto& m : messages) {
    if (m.client >= clients.size())
      throw Error(ErrorCode::kConfigError,
                  "message for unknown client " + std::to_string(m.client));
    clients[m.client].send(sealer, m.payload, m.send_time);
  }

  std::vector<Proxy> proxies;
  for (int i = 0; i < config.proxies; ++i) proxies.emplace_back(i);

  SimulationResult result;
  result.collector_log.reserve(messages.size());
  // Next event: the client with the earliest pending dispatch, lowest index
  // on ties.
  using Event = std::pair<std::int64_t, std::size_t>;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  for (std::size_t i = 0; i < clients.size(); ++i)
    if (clients[i].pending() > 0) events.emplace(clients[i].next_dispatch_time(), i);

  while (!events.empty()) {
    const auto [now, index] = events.top();
    events.pop();
    ClientChannel& client = clients[index];
    for (auto& message : client.dispatch(now)) {
      Proxy& proxy = proxies[route(message, config.proxies)];
      SealedMessage forwarded =
          proxy.receive(client.source_id(), std::move(message), now);
      result.collector_log.push_back({collector.unseal(forwarded), now});
    }
    if (client.pending() > 0) events.emplace(client.next_dispatch_time(), index);
  }

  for (auto& proxy : proxies) result.proxy_logs.push_back(proxy.log());
  return result;
}

void write_proxy_logs(std::ostream& out, const SimulationResult& result) {
  for (std::size_t p = 0; p < result.proxy_logs.size(); ++p) {
    for (const auto& entry : result.proxy_logs[p]) {
      nlohmann::ordered_json j;
      j["proxy"] = p;
      j["source_id"] = entry.source_id;
      j["envelope_size"] = entry.envelope_size;
      j["time"] = entry.time;
      out << j.dump() << '\n';
    }
  }
}

void write_collector_log(std::ostream& out, const SimulationResult& result) {
  for (const auto& entry : result.collector_log) {
    nlohmann::ordered_json j;
    j["payload"] = entry.payload;
    j["arrival_time"] = entry.arrival_time;
    out << j.dump() << '\n';
  }
}

double max_proxy_share(const SimulationResult& result) {
  std::size_t total = 0, largest = 0;
  for (const auto& log : result.proxy_logs) {
    total += log.size();
    largest = std::max(largest, log.size());
  }
  return total == 0 ? 0.0 : static_cast<double>(largest) / total;
}

double mutual_information(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("label sequences differ in length");
  if (a.empty()) return 0.0;
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1;
    pb[b[i]] += 1;
    pab[{a[i], b[i]}] += 1;
  }
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (const auto& [key, count] : pab) {
    const double joint = count / n;
    mi += joint * std::log2(joint / ((pa[key.first] / n) * (pb[key.second] / n)));
  }
  return std::max(0.0, mi);
}

}  // namespace trackscope
