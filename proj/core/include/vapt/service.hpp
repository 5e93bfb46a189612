#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "vapt/config.hpp"
#include "vapt/store.hpp"

namespace vapt {

using Clock = std::function<Instant()>;

// Study operations behind the HTTP API. Every mutation is applied as a
// study event and persisted before the call returns. Calls for one
// participant are serialized; different participants run concurrently.
class StudyService {
 public:
  StudyService(ServiceConfig config, std::shared_ptr<Gateway> gateway, Clock clock = now_utc);
  ~StudyService();
  StudyService(const StudyService&) = delete;
  StudyService& operator=(const StudyService&) = delete;

  const ServiceConfig& config() const { return config_; }
  StudyStore& store() { return store_; }
  Gateway& gateway() { return *gateway_; }

  json create_participant(const std::string& code);
  json status(const std::string& code);
  json advance(const std::string& code);

  json gate(const std::string& code);
  // Opens a session when none is open (subject to the gate), records the
  // message and Day's reply.
  json post_message(const std::string& code, const std::string& text);
  json end_session(const std::string& code);

  json submit_pre_survey(const std::string& code, const LikertAnswers& answers);
  json submit_baseline(const std::string& code, const Baseline& baseline);
  json submit_post_survey(const std::string& code, const LikertAnswers& answers);

  // Blocking pre-generation.
  json pregenerate(const std::string& code);
  // Background pre-generation; poll with pregen_status.
  json start_pregeneration(const std::string& code);
  json pregen_status(const std::string& code);
  void wait_for_jobs();

  json graph(const std::string& code);
  json graph_node(const std::string& code, std::uint32_t topic_id, LifeContext context);

  json round(const std::string& code, int index);
  json rate(const std::string& code, int index, const std::string& slot_id, int score,
            std::optional<std::string> idempotency_key = std::nullopt);
  json reveal(const std::string& code, int index);

  json chart_pair(const std::string& code, int index);
  json choose_chart(const std::string& code, int pair, const std::string& pick,
                    std::optional<std::string> idempotency_key = std::nullopt);
  json thinking_log(const std::string& code);

  json report(const std::string& code);
  void purge(const std::string& code);

 private:
  struct Job {
    std::string state = "idle";  // idle, running, done, failed
    Instant started{};
    std::optional<Instant> finished;
    std::string error;
    std::jthread thread;
  };

  std::mutex& lock_for(const std::string& code);
  StudyRecord load(const std::string& code);
  void apply(StudyRecord& record, const StudyEvent& e);
  crypto::Key create_key(const std::string& code);
  json pregenerate_unlocked(const std::string& code);
  const PreGenCache& require_cache(const StudyRecord& r, bool need_stage, StageState stage) const;

  ServiceConfig config_;
  std::shared_ptr<Gateway> gateway_;
  Clock clock_;
  StudyStore store_;
  ProviderRoles roles_;

  std::mutex locks_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
  std::mutex jobs_mu_;
  std::map<std::string, Job> jobs_;
};

// Public view of a blind round: no sealed section, conditions only after reveal.
json public_round(const BlindRound& r);

}  // namespace vapt
