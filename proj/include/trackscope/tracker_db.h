#ifndef TRACKSCOPE_TRACKER_DB_H_
#define TRACKSCOPE_TRACKER_DB_H_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trackscope {

enum class Category {
  kAdvertising,
  kSiteAnalytics,
  kSocialMedia,
  kCdn,
  kEssential,
  kAudioVideoPlayer,
  kHosting,
  kCustomerInteraction,
  kMisc,
  kExtensionsMitm,
  kUnknown,
};

std::string_view category_name(Category category);
std::optional<Category> parse_category(std::string_view name);

inline constexpr Category kAllCategories[] = {
    Category::kAdvertising,      Category::kSiteAnalytics,
    Category::kSocialMedia,      Category::kCdn,
    Category::kEssential,        Category::kAudioVideoPlayer,
    Category::kHosting,          Category::kCustomerInteraction,
    Category::kMisc,             Category::kExtensionsMitm,
    Category::kUnknown,
};

struct TrackerDbEntry {
  std::string pattern;  // hostname suffix, e.g. "a.example.com"
  std::string tracker_id;
  std::string tracker_name;
  std::string company_id;
  Category category = Category::kUnknown;

  bool operator==(const TrackerDbEntry&) const = default;
};

// Domain -> tracker/company map indexed by a reversed-label trie, so
// lookups return the entry whose pattern matches the most labels.
class TrackerDb {
 public:
  TrackerDb();
  TrackerDb(TrackerDb&&) noexcept;
  TrackerDb& operator=(TrackerDb&&) noexcept;
  ~TrackerDb();

  // CSV "pattern,tracker_id,tracker_name,company_id,category" with a header
  // row, '#' comments and an optional "#version: X" pragma. Throws
  // kParseError (with the line number) or kDuplicatePattern.
  static TrackerDb parse(std::istream& in);
  static TrackerDb load(const std::filesystem::path& path);

  void add(TrackerDbEntry entry);

  // Deepest-suffix entry; nullptr when no pattern matches.
  const TrackerDbEntry* match_domain(std::string_view hostname) const;

  // Throws kUnknownTracker.
  const std::string& company_of(std::string_view tracker_id) const;
  bool has_tracker(std::string_view tracker_id) const;
  const TrackerDbEntry* tracker(std::string_view tracker_id) const;

  const std::vector<TrackerDbEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const std::string& version() const { return version_; }
  void set_version(std::string version) { version_ = std::move(version); }

  // Canonical form: pragma, header, entries sorted by pattern.
  std::string serialize() const;

 private:
  struct Node;

  std::unique_ptr<Node> root_;
  std::vector<TrackerDbEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> first_by_tracker_;
  std::string version_;
};

const TrackerDbEntry* match_domain(const TrackerDb& db,
                                   std::string_view hostname);
const std::string& company_of(const TrackerDb& db, std::string_view tracker_id);

std::filesystem::path default_tracker_db_path();

}  // namespace trackscope

#endif  // TRACKSCOPE_TRACKER_DB_H_
