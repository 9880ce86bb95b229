#include "trackscope/tracker_db.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <map>
#include <utility>

#include "trackscope/error.h"

namespace trackscope {
namespace {

constexpr std::array<std::pair<Category, std::string_view>, 11> kCategories{{
    {Category::kAdvertising, "advertising"},
    {Category::kSiteAnalytics, "site_analytics"},
    {Category::kSocialMedia, "social_media"},
    {Category::kCdn, "cdn"},
    {Category::kEssential, "essential"},
    {Category::kAudioVideoPlayer, "audio_video_player"},
    {Category::kHosting, "hosting"},
    {Category::kCustomerInteraction, "customer_interaction"},
    {Category::kMisc, "misc"},
    {Category::kExtensionsMitm, "extensions_mitm"},
    {Category::kUnknown, "unknown"},
}};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool valid_pattern(std::string_view p) {
  if (p.empty() || p.front() == '.' || p.back() == '.' ||
      p.find("..") != std::string_view::npos)
    return false;
  return std::all_of(p.begin(), p.end(), [](unsigned char c) {
    return std::islower(c) || std::isdigit(c) || c == '-' || c == '.' ||
           c == '_';
  });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view category_name(Category category) {
  for (const auto& [c, name] : kCategories)
    if (c == category) return name;
  return "unknown";
}

std::optional<Category> parse_category(std::string_view name) {
  for (const auto& [c, n] : kCategories)
    if (n == name) return c;
  return std::nullopt;
}

struct TrackerDb::Node {
  std::map<std::string, std::unique_ptr<Node>, std::less<>> children;
  std::optional<std::size_t> entry;
};

TrackerDb::TrackerDb() : root_(std::make_unique<Node>()) {}
TrackerDb::TrackerDb(TrackerDb&&) noexcept = default;
TrackerDb& TrackerDb::operator=(TrackerDb&&) noexcept = default;
TrackerDb::~TrackerDb() = default;

void TrackerDb::add(TrackerDbEntry entry) {
  if (!valid_pattern(entry.pattern))
    throw Error(ErrorCode::kParseError,
                "invalid pattern '" + entry.pattern + "'");
  Node* node = root_.get();
  std::string_view rest = entry.pattern;
  while (!rest.empty()) {
    const auto dot = rest.rfind('.');
    const std::string_view label =
        dot == std::string_view::npos ? rest : rest.substr(dot + 1);
    rest = dot == std::string_view::npos ? std::string_view{}
                                         : rest.substr(0, dot);
    auto& child = node->children[std::string(label)];
    if (!child) child = std::make_unique<Node>();
    node = child.get();
  }
  if (node->entry)
    throw Error(ErrorCode::kDuplicatePattern, "'" + entry.pattern + "'");

  if (auto it = first_by_tracker_.find(entry.tracker_id);
      it != first_by_tracker_.end() &&
      entries_[it->second].company_id != entry.company_id)
    throw Error(ErrorCode::kParseError,
                "tracker '" + entry.tracker_id +
                    "' mapped to more than one company");

  node->entry = entries_.size();
  first_by_tracker_.emplace(entry.tracker_id, entries_.size());
  entries_.push_back(std::move(entry));
}

TrackerDb TrackerDb::parse(std::istream& in) {
  TrackerDb db;
  std::string line;
  std::size_t number = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      constexpr std::string_view kPragma = "#version:";
      if (view.starts_with(kPragma))
        db.version_ = std::string(trim(view.substr(kPragma.size())));
      continue;
    }
    const auto fields = split_csv(std::string(view));
    if (!header_seen) {
      header_seen = true;
      if (!fields.empty() && fields[0] == "pattern") continue;
    }
    const auto where = "tracker db line " + std::to_string(number) + ": ";
    if (fields.size() != 5)
      throw Error(ErrorCode::kParseError, where + "expected 5 fields");
    const auto category = parse_category(fields[4]);
    if (!category)
      throw Error(ErrorCode::kParseError,
                  where + "unknown category '" + fields[4] + "'");
    if (fields[1].empty() || fields[3].empty())
      throw Error(ErrorCode::kParseError, where + "empty tracker or company id");
    try {
      db.add({fields[0], fields[1], fields[2], fields[3], *category});
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
  return db;
}

TrackerDb TrackerDb::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::kConfigError,
                "cannot open tracker db " + path.string());
  return parse(in);
}

const TrackerDbEntry* TrackerDb::match_domain(std::string_view hostname) const {
  const Node* node = root_.get();
  const TrackerDbEntry* best = nullptr;
  std::string_view rest = hostname;
  while (!rest.empty()) {
    const auto dot = rest.rfind('.');
    const std::string_view label =
        dot == std::string_view::npos ? rest : rest.substr(dot + 1);
    rest = dot == std::string_view::npos ? std::string_view{}
                                         : rest.substr(0, dot);
    const auto it = node->children.find(label);
    if (it == node->children.end()) break;
    node = it->second.get();
    if (node->entry) best = &entries_[*node->entry];
  }
  return best;
}

bool TrackerDb::has_tracker(std::string_view tracker_id) const {
  return first_by_tracker_.find(tracker_id) != first_by_tracker_.end();
}

const TrackerDbEntry* TrackerDb::tracker(std::string_view tracker_id) const {
  const auto it = first_by_tracker_.find(tracker_id);
  return it == first_by_tracker_.end() ? nullptr : &entries_[it->second];
}

const std::string& TrackerDb::company_of(std::string_view tracker_id) const {
  const auto* entry = tracker(tracker_id);
  if (entry == nullptr)
    throw Error(ErrorCode::kUnknownTracker, "'" + std::string(tracker_id) + "'");
  return entry->company_id;
}

std::string TrackerDb::serialize() const {
  std::vector<const TrackerDbEntry*> sorted;
  for (const auto& e : entries_) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->pattern < b->pattern; });
  std::string out;
  if (!version_.empty()) out += "#version: " + version_ + "\n";
  out += "pattern,tracker_id,tracker_name,company_id,category\n";
  for (const auto* e : sorted) {
    out += e->pattern + "," + e->tracker_id + "," + e->tracker_name + "," +
           e->company_id + "," + std::string(category_name(e->category)) + "\n";
  }
  return out;
}

const TrackerDbEntry* match_domain(const TrackerDb& db,
                                   std::string_view hostname) {
  return db.match_domain(hostname);
}

const std::string& company_of(const TrackerDb& db,
                              std::string_view tracker_id) {
  return db.company_of(tracker_id);
}

std::filesystem::path default_tracker_db_path() {
  if (const char* dir = std::getenv("TRACKSCOPE_DATA_DIR"))
    return std::filesystem::path(dir) / "trackers.csv";
  return std::filesystem::path(TRACKSCOPE_DATA_DIR) / "trackers.csv";
}

}  // namespace trackscope
