#ifndef TRACKSCOPE_GENERATOR_H_
#define TRACKSCOPE_GENERATOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trackscope/geo_table.h"
#include "trackscope/request_event.h"

namespace trackscope {

// One synthetic third party. Probabilities are per page unless noted.
struct SyntheticTracker {
  std::string name;  // ground-truth key in the sidecar
  // "{user}" in a hostname expands to a per-user token.
  std::vector<std::string> hostnames;
  double inclusion_probability = 0.5;
  std::optional<std::vector<int>> sites;  // eligible site indices; all if unset
  std::map<std::string, double> content_types{{"script", 1.0}};
  int requests_per_type = 1;
  double cookie_probability = 0;
  double set_cookie_probability = 0;
  double identifier_probability = 0;
  double https_probability = 1.0;  // per request
  double block_probability = 0;    // per request, host extension
  double external_block_probability = 0;  // per request
  double cache_probability = 0;    // per response
  std::map<std::string, double> server_countries{{"US", 1.0}};
  double content_length_mu = 8.0;  // log-normal bytes per response
  double content_length_sigma = 1.0;
};

struct HttpsStep {
  std::string month;
  double secure_site_share = 0;
};

struct SyntheticCorpusSpec {
  std::uint64_t seed = 1;
  std::vector<std::string> months{"2018-04"};
  int pages_per_month = 1000;
  int site_count = 50;
  double zipf_exponent = 1.0;  // 0 = uniform popularity
  int paths_per_site = 5;
  double private_path_share = 0.1;  // pages on "/user/<name>/..." paths
  int user_count = 100;
  std::map<std::string, double> user_countries{{"US", 1.0}};
  int tabs_per_user = 2;
  // When a month has a step, sites with index below share*count serve all
  // third-party content over HTTPS and the rest keep per-tracker behaviour.
  std::vector<HttpsStep> https_schedule;
  std::vector<SyntheticTracker> trackers;

  void validate() const;
};

SyntheticCorpusSpec corpus_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SyntheticCorpusSpec& spec);

struct GeneratedCorpus {
  std::vector<RequestEvent> events;
  // Exact counts the generator produced; see README for the layout.
  nlohmann::ordered_json truth;
};

// Deterministic for a given spec (seed included). Server IPs are drawn from
// the first IPv4 prefix of each country in `geo`.
GeneratedCorpus generate_corpus(const SyntheticCorpusSpec& spec,
                                const GeoTable& geo);

std::string site_hostname(int index);

}  // namespace trackscope

#endif  // TRACKSCOPE_GENERATOR_H_
