#include "vapt/store.hpp"

#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

#include "vapt/error.hpp"

namespace vapt {

namespace fs = std::filesystem;

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), Errc::io, "cannot write " + tmp.string());
    out << content;
    out.flush();
    require(static_cast<bool>(out), Errc::io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

StudyStore::StudyStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "participants", ec);
  fs::create_directories(root_ / "keys", ec);
  require(!ec && fs::is_directory(root_ / "participants"), Errc::io, "storage unavailable at " + root_.string());
}

bool StudyStore::valid_code(std::string_view code) {
  static const std::regex re("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(code.begin(), code.end(), re);
}

fs::path StudyStore::participant_dir(const std::string& code) const {
  require(valid_code(code), Errc::invalid_argument, "invalid participant code");
  return root_ / "participants" / code;
}

fs::path StudyStore::key_path(const std::string& code) const {
  require(valid_code(code), Errc::invalid_argument, "invalid participant code");
  return root_ / "keys" / (code + ".key");
}

fs::path StudyStore::artifact_dir(const std::string& code) const { return participant_dir(code) / "artifacts"; }

bool StudyStore::exists(const std::string& code) const {
  return valid_code(code) && fs::exists(participant_dir(code) / "events.jsonl");
}

std::vector<std::string> StudyStore::codes() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_ / "participants"))
    if (entry.is_directory() && fs::exists(entry.path() / "events.jsonl")) out.push_back(entry.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<StudyEvent> StudyStore::events(const std::string& code) const {
  auto path = participant_dir(code) / "events.jsonl";
  if (!fs::exists(path)) throw Error(Errc::not_found, "unknown participant code '" + code + "'");
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io, "cannot read " + path.string());
  std::vector<StudyEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(Errc::corrupt_history, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(study_event_from_json(j));
  }
  return out;
}

void StudyStore::persist(const StudyRecord& record) {
  const auto dir = participant_dir(record.participant_code);
  fs::create_directories(dir);
  const auto path = dir / "events.jsonl";
  std::vector<StudyEvent> existing;
  if (fs::exists(path)) existing = events(record.participant_code);
  require(existing.size() <= record.history.size(), Errc::corrupt_history,
          "record history is shorter than the stored log");
  for (std::size_t i = 0; i < existing.size(); ++i)
    require(existing[i] == record.history[i], Errc::corrupt_history,
            "record history diverges from the stored log at event " + std::to_string(i));
  if (existing.size() < record.history.size()) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    require(static_cast<bool>(out), Errc::io, "cannot append to " + path.string());
    for (std::size_t i = existing.size(); i < record.history.size(); ++i) out << to_json(record.history[i]).dump() << '\n';
    out.flush();
    require(static_cast<bool>(out), Errc::io, "append failed for " + path.string());
  }
  write_atomic(dir / "snapshot.json", to_json(record).dump(2) + "\n");
}

StudyRecord StudyStore::load(const std::string& code) const {
  auto evs = events(code);
  try {
    return replay(evs);
  } catch (const Error& e) {
    fail(Errc::corrupt_history, "replay of '" + code + "' failed: " + e.what());
  }
}

void StudyStore::save_key(const std::string& code, const crypto::Key& key) {
  write_atomic(key_path(code), crypto::to_hex(key) + "\n");
  fs::permissions(key_path(code), fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
}

crypto::Key StudyStore::load_key(const std::string& code) const {
  auto path = key_path(code);
  if (!fs::exists(path)) throw Error(Errc::not_found, "no reveal key for '" + code + "'");
  auto text = read_file(path);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return crypto::key_from_hex(text);
}

bool StudyStore::has_key(const std::string& code) const { return fs::exists(key_path(code)); }

void StudyStore::purge(const std::string& code) {
  auto dir = participant_dir(code);
  bool had = fs::exists(dir) || fs::exists(key_path(code));
  if (!had) throw Error(Errc::not_found, "unknown participant code '" + code + "'");
  fs::remove_all(dir);
  fs::remove(key_path(code));
}

std::vector<fs::path> StudyStore::scan_references(std::string_view needle) const {
  std::vector<fs::path> hits;
  for (const auto& entry : fs::recursive_directory_iterator(root_)) {
    auto rel = fs::relative(entry.path(), root_).string();
    if (rel.find(needle) != std::string::npos) {
      hits.push_back(entry.path());
      continue;
    }
    if (entry.is_regular_file() && read_file(entry.path()).find(needle) != std::string::npos) hits.push_back(entry.path());
  }
  return hits;
}

}  // namespace vapt
