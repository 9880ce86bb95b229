#ifndef TRACKSCOPE_TRANSPORT_H_
#define TRACKSCOPE_TRANSPORT_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trackscope/sanitizer.h"

namespace trackscope {

using Bytes = std::vector<std::uint8_t>;

struct SealedMessage {
  Bytes envelope;
  int proxy_index = -1;
  std::int64_t send_time = 0;
};

// Pluggable sealing primitive. Implementations must produce envelopes that
// reveal nothing about the plaintext without the key.
class SealingScheme {
 public:
  virtual ~SealingScheme() = default;
  virtual std::size_t nonce_size() const = 0;
  virtual Bytes seal(std::span<const std::uint8_t> plaintext,
                     std::span<const std::uint8_t> nonce) const = 0;
  // Throws when the envelope fails authentication.
  virtual Bytes open(std::span<const std::uint8_t> envelope) const = 0;
};

// Authenticated secret-key sealing (XSalsa20-Poly1305) with the nonce
// prepended to the ciphertext.
class SecretBoxScheme final : public SealingScheme {
 public:
  static constexpr std::size_t kKeySize = 32;

  explicit SecretBoxScheme(const std::array<std::uint8_t, kKeySize>& key);
  // Deterministic key for reproducible simulations.
  static SecretBoxScheme from_seed(std::uint64_t seed);

  std::size_t nonce_size() const override;
  Bytes seal(std::span<const std::uint8_t> plaintext,
             std::span<const std::uint8_t> nonce) const override;
  Bytes open(std::span<const std::uint8_t> envelope) const override;

 private:
  std::array<std::uint8_t, kKeySize> key_;
};

// Client-side capability: can seal, cannot open.
class Sealer {
 public:
  explicit Sealer(std::shared_ptr<const SealingScheme> scheme)
      : scheme_(std::move(scheme)) {}

  SealedMessage seal(std::string_view payload, std::int64_t send_time,
                     std::mt19937_64& nonce_rng) const;
  SealedMessage seal(const SanitizedPageLoad& payload, std::int64_t send_time,
                     std::mt19937_64& nonce_rng) const;

 private:
  std::shared_ptr<const SealingScheme> scheme_;
};

// Collector-side capability: the only holder of unseal.
class Collector {
 public:
  explicit Collector(std::shared_ptr<const SealingScheme> scheme)
      : scheme_(std::move(scheme)) {}

  std::string unseal(const SealedMessage& message) const;

 private:
  std::shared_ptr<const SealingScheme> scheme_;
};

// Uniform hash of the envelope bytes modulo proxy_count.
int route(const SealedMessage& message, int proxy_count);

// Delays each message by a uniformly sampled amount and releases messages in
// dispatch-time order rather than enqueue order.
class ClientChannel {
 public:
  ClientChannel(std::string source_id, std::int64_t delay_min_ms,
                std::int64_t delay_max_ms, std::uint64_t rng_seed);

  const std::string& source_id() const { return source_id_; }

  // Seals and queues a payload sent at send_time.
  void send(const Sealer& sealer, std::string_view payload,
            std::int64_t send_time);
  void enqueue(SealedMessage message);

  // Messages whose dispatch time is <= now, in dispatch-time order.
  std::vector<SealedMessage> dispatch(std::int64_t now);

  // Earliest pending dispatch time, or INT64_MAX when idle.
  std::int64_t next_dispatch_time() const;
  std::size_t pending() const { return pending_.size(); }

 private:
  struct Pending {
    std::int64_t dispatch_time;
    std::uint64_t sequence;
    SealedMessage message;
  };

  std::string source_id_;
  std::int64_t delay_min_;
  std::int64_t delay_max_;
  std::mt19937_64 rng_;
  std::uint64_t next_sequence_ = 0;
  std::vector<Pending> pending_;  // min-heap on (dispatch_time, sequence)
};

// What a proxy can record: who sent something, how big, and when.
struct ProxyLogEntry {
  std::string source_id;
  std::size_t envelope_size = 0;
  std::int64_t time = 0;
};

// What the collector can record. There is deliberately no sender field.
struct CollectorLogEntry {
  std::string payload;
  std::int64_t arrival_time = 0;
};

// Forwards envelopes to the collector with the network identity removed.
// Has no unseal capability.
class Proxy {
 public:
  explicit Proxy(int index) : index_(index) {}

  SealedMessage receive(std::string_view source_id, SealedMessage message,
                        std::int64_t now);

  int index() const { return index_; }
  const std::vector<ProxyLogEntry>& log() const { return log_; }

 private:
  int index_;
  std::vector<ProxyLogEntry> log_;
};

struct TransportConfig {
  int clients = 1;
  int proxies = 1;
  std::int64_t delay_min_ms = 0;
  std::int64_t delay_max_ms = 30000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct OutgoingMessage {
  std::size_t client = 0;
  std::string payload;
  std::int64_t send_time = 0;
};

struct SimulationResult {
  std::vector<std::vector<ProxyLogEntry>> proxy_logs;
  std::vector<CollectorLogEntry> collector_log;
};

// Discrete-event run: clients seal and delay, proxies route and strip, the
// collector unseals. Deterministic for a given config.
SimulationResult run_simulation(const TransportConfig& config,
                                const std::vector<OutgoingMessage>& messages);

void write_proxy_logs(std::ostream& out, const SimulationResult& result);
void write_collector_log(std::ostream& out, const SimulationResult& result);

// Largest fraction of traffic seen by any single proxy.
double max_proxy_share(const SimulationResult& result);

// Plug-in mutual information estimate in bits between two label sequences.
double mutual_information(std::span<const int> a, std::span<const int> b);

}  // namespace trackscope

#endif  // TRACKSCOPE_TRANSPORT_H_
