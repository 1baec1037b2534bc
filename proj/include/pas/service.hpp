#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "pas/experiment.hpp"

namespace httplib {
class Server;
}

namespace pas {

/// HTTP front end for interactive alignment. All state (subjects, jobs,
/// alignments) lives as JSON files under `<output_dir>/service`, so a
/// restarted service resumes where it stopped, including queued jobs.
class Service {
 public:
  explicit Service(ExperimentConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds without serving yet; port 0 picks a free port. Returns the bound
  /// port or throws BindError.
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires a successful bind().
  void listen();
  void stop();

  const std::filesystem::path& state_dir() const { return state_dir_; }

 private:
  struct Job {
    std::string id;
    std::string subject_id;
    int k = 0;
  };

  void routes();
  void worker_loop(std::stop_token stop);
  void run_job(const Job& job);
  std::string next_job_id();
  SubjectRecord load_subject(const std::string& id) const;
  std::optional<AlignmentResult> load_alignment(const std::string& subject_id) const;
  const Catalog& scoring_catalog(const SubjectRecord& subject) const;

  ExperimentConfig config_;
  std::filesystem::path state_dir_;
  CatalogPair catalogs_;
  std::unique_ptr<Transformer> model_;
  std::unique_ptr<httplib::Server> server_;

  std::mutex mu_;  // guards queue_, job files and subject files
  std::condition_variable_any cv_;
  std::deque<Job> queue_;
  long job_counter_ = 0;
  std::jthread worker_;
};

/// Builds a Service, binds and serves until the process ends.
void serve(const ExperimentConfig& config, const std::string& host, int port);

}  // namespace pas
