#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cqadet/classifier.hpp"
#include "cqadet/corpus.hpp"
#include "cqadet/textstats.hpp"

namespace cqadet {

enum class Role { Regular, Helper, Admin };

std::optional<Role> parse_role(std::string_view name);
const char* to_string(Role r);
inline bool may_annotate(Role r) { return r != Role::Regular; }

struct CachedVerdict {
  double score = 0.0;
  Label label = Label::Normal;
  std::uint64_t model_version = 0;
  bool operator==(const CachedVerdict&) const = default;
};

// The full logical content of the store. Labels live in `sessions[url].label`;
// `counts` is exactly the result of applying every labeled session.
struct StoreState {
  std::map<std::string, QASession> sessions;
  std::map<std::string, CachedVerdict> verdicts;
  CountState counts;
  std::vector<Model> models;  // ordered by version; the last one is current
  std::uint64_t labels_since_retrain = 0;

  bool operator==(const StoreState&) const = default;
};

// Snapshot file: a header line, the sessions in corpus line format, then the
// verdicts, counts and model history, closed by an FNV-1a checksum line.
// `log_epoch` names the first operation log not folded into the snapshot.
void persist(const StoreState& state, const std::filesystem::path& path,
             std::uint64_t log_epoch = 0);
// Throws CorruptSnapshot on a checksum mismatch, truncation, or counts that do
// not match a rebuild from the stored labels.
StoreState restore(const std::filesystem::path& path, std::uint64_t* log_epoch = nullptr);

// A model together with the counts its features must be computed against.
struct ScoringContext {
  Model model;
  CountState counts;
};

struct RetrainResult {
  Model model;
  std::size_t training_size = 0;
};

// Thread-safe store. Mutations are serialized; lookups and snapshots share a
// reader lock; scoring reads an immutable ScoringContext swapped atomically on
// retrain. With a directory, every mutation is appended to `ops.log` and
// `compact()` folds the log into `snapshot.dat`.
class Store {
 public:
  Store();
  // Opens (or creates) a durable store, replaying snapshot then log.
  explicit Store(const std::filesystem::path& dir);
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Stores `s` keyed by url; a label on `s` is ignored. Returns false when an
  // identical session was already present. Throws ConflictingContent when the
  // url exists with different fields.
  bool upsert_session(const QASession& s);

  // Upserts and labels in one step; used to seed the store from a corpus.
  void ingest_labeled(std::span<const QASession> corpus);

  std::optional<QASession> find_session(const std::string& url) const;
  std::optional<CachedVerdict> find_by_url(const std::string& url) const;

  // Keeps the first verdict recorded for a url and returns the stored one.
  CachedVerdict record_verdict(const std::string& url, const CachedVerdict& v);

  // Replaces any earlier label's contribution. Same label again is a no-op.
  void set_label(const std::string& url, Label label, Role role);
  void clear_label(const std::string& url, Role role);

  std::uint64_t labels_since_retrain() const;

  // Trains on every labeled session and publishes the next version. Training
  // runs outside the writer lock; concurrent scoring keeps using the previous
  // context until the swap. Throws NoNewLabels / SingleClassTrainingSet.
  RetrainResult retrain(const TrainOptions& opts = {});

  // Recomputes every cached verdict against the current context.
  std::size_t rescore();

  std::shared_ptr<const ScoringContext> scoring_context() const;
  std::optional<Model> model_version(std::uint64_t version) const;

  StoreState snapshot() const;
  void compact();

 private:
  void append_log(const std::string& payload);
  void replay_log();
  void publish(std::shared_ptr<const ScoringContext> ctx);

  void start_log(bool truncate);

  std::filesystem::path dir_;
  std::ofstream log_;
  std::uint64_t epoch_ = 0;

  mutable std::shared_mutex mu_;
  StoreState state_;

  mutable std::mutex ctx_mu_;
  std::shared_ptr<const ScoringContext> ctx_;

  std::mutex retrain_mu_;
};

}  // namespace cqadet
