#include "qii/log.h"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include "qii/error.h"
#include "qii/text.h"

namespace qii {

namespace {

std::string now_iso() {
  auto now = std::chrono::system_clock::now();
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms % 1000));
  return buf;
}

std::string flatten(const std::string &payload) {
  std::string out = payload;
  for (auto &c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

AppendLog::AppendLog(std::string path) : path_(std::move(path)) {}

std::string AppendLog::default_path() {
  if (const char *env = std::getenv("QII_LOG"); env && *env) return env;
  return "qii.log";
}

std::string AppendLog::last_timestamp() const {
  std::ifstream in(path_, std::ios::binary | std::ios::ate);
  if (!in) return {};
  auto size = static_cast<long long>(in.tellg());
  auto start = std::max(0LL, size - 4096);
  in.seekg(start);
  std::string tail(static_cast<std::size_t>(size - start), '\0');
  in.read(tail.data(), static_cast<std::streamsize>(tail.size()));
  while (!tail.empty() && tail.back() == '\n') tail.pop_back();
  auto nl = tail.rfind('\n');
  auto line = nl == std::string::npos ? tail : tail.substr(nl + 1);
  return line.substr(0, line.find('\t'));
}

void AppendLog::append(LogRecord::Kind kind, const std::string &payload) {
  auto stamp = now_iso();
  auto last = last_timestamp();
  if (!last.empty() && last > stamp) stamp = last;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw ConfigError("cannot append to log '" + path_ + "'");
  out << stamp << '\t' << (kind == LogRecord::Kind::kWeb ? "web" : "query") << '\t'
      << flatten(payload) << '\n';
}

std::vector<LogRecord> AppendLog::read_all() const {
  std::vector<LogRecord> out;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    auto parts = split(line, '\t');
    if (parts.size() < 3) continue;
    LogRecord r;
    r.timestamp = parts[0];
    r.kind = parts[1] == "query" ? LogRecord::Kind::kQuery : LogRecord::Kind::kWeb;
    parts.erase(parts.begin(), parts.begin() + 2);
    r.payload = join(parts, "\t");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace qii
