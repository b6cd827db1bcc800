#pragma once

#include <string>
#include <vector>

namespace qii {

struct LogRecord {
  enum class Kind { kWeb, kQuery };

  std::string timestamp;  // ISO-8601 UTC with milliseconds
  Kind kind = Kind::kWeb;
  std::string payload;
};

// Append-only web/query log, one tab-separated record per line. Records
// are never rewritten and timestamps never go backwards within a file.
class AppendLog {
 public:
  explicit AppendLog(std::string path);

  // $QII_LOG when set, else "qii.log" in the working directory.
  static std::string default_path();

  void append(LogRecord::Kind kind, const std::string &payload);
  std::vector<LogRecord> read_all() const;
  const std::string &path() const { return path_; }

 private:
  std::string last_timestamp() const;

  std::string path_;
};

}  // namespace qii
