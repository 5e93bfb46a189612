#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vapt/crypto.hpp"
#include "vapt/study.hpp"

namespace vapt {

// File layout under root:
//   participants/<code>/events.jsonl   append-only event log
//   participants/<code>/snapshot.json  derived state
//   participants/<code>/artifacts/     exported pre-generated files
//   keys/<code>.key                    reveal key (hex), kept apart from records
class StudyStore {
 public:
  explicit StudyStore(std::filesystem::path root);

  // [A-Za-z0-9_-]{1,64}
  static bool valid_code(std::string_view code);

  const std::filesystem::path& root() const { return root_; }
  bool exists(const std::string& code) const;
  std::vector<std::string> codes() const;

  // Appends events not yet on disk and rewrites the snapshot.
  void persist(const StudyRecord& record);
  StudyRecord load(const std::string& code) const;
  std::vector<StudyEvent> events(const std::string& code) const;

  void save_key(const std::string& code, const crypto::Key& key);
  crypto::Key load_key(const std::string& code) const;
  bool has_key(const std::string& code) const;

  std::filesystem::path artifact_dir(const std::string& code) const;

  // Removes the record, artifacts and key.
  void purge(const std::string& code);
  // Files whose path or content mention `needle`.
  std::vector<std::filesystem::path> scan_references(std::string_view needle) const;

 private:
  std::filesystem::path participant_dir(const std::string& code) const;
  std::filesystem::path key_path(const std::string& code) const;

  std::filesystem::path root_;
};

}  // namespace vapt
