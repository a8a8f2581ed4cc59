#pragma once

#include "dexpush/bps.hpp"
#include "dexpush/generator.hpp"
#include "dexpush/planner.hpp"
#include "dexpush/pose_optimizer.hpp"
#include "dexpush/push_sim.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace dexpush {

inline constexpr const char* kToolVersion = "dexpush 0.1.0";

/// Direction tokens: +x -x +y -y or an angle in degrees about +z.
Vec3 parse_direction(const std::string& token);
std::vector<Vec3> parse_directions(const std::string& text);
std::string direction_label(const Vec3& u);

/// Everything gen-data needs. Paths are resolved against the manifest's directory.
struct RunManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> objects;  // object manifest paths
  std::vector<Vec3> directions{Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitX()};
  std::string hand = "allegro";  // shipped name or hand file path
  std::string weights;           // energy weights file, empty for defaults
  std::string optimizer;         // optimizer config file, empty for defaults
  int restarts = 0;              // > 0 overrides the optimizer config
  int iterations = 0;
  double push_length = 0.20;
  int augment_count = 10;
  std::string out = ".";

  static RunManifest from_config(const KeyValueConfig& cfg, const std::string& base_dir = ".");
  static RunManifest load(const std::string& path);
  /// Throws when an object or config file is missing or a value is out of range.
  void validate() const;

  std::string hand_path() const;
  OptimizerConfig optimizer_config() const;
  EnergyWeights energy_weights() const;
  /// Stable text of every setting and the contents of every referenced file.
  std::string canonical_text() const;
};

/// 16 hex digits of FNV-1a over the text.
std::string hash_hex(const std::string& text);

/// World -> canonical frame: rotate about z so u_dir is +x, then shift the
/// rotated cloud to x-y mean 0 and min z 0 (the same shift BPS encoding uses).
Transform3 canonical_frame(const ObjectModel& obj, const Vec3& u_dir);

/// Fixed basis shared by training and sampling.
const BasisPointSet& default_basis();

/// BPS features of the object seen from the push direction.
BpsEncoding canonical_condition(const ObjectModel& obj, const Vec3& u_dir, const BasisPointSet& basis = default_basis());

struct DatasetHeader {
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string hand = "allegro";
  std::map<std::string, std::string> objects;  // object id -> manifest path
};

struct Dataset {
  DatasetHeader header;
  std::vector<DatasetRecord> records;
};

/// JSON lines: a header line then one record per line. Record poses are
/// stored in the world frame ("pose") and in the canonical frame
/// ("pose_canonical"), which needs the objects.
void write_dataset(std::ostream& os, const Dataset& data, const std::map<std::string, ObjectModel>& objects);
void write_dataset(const std::string& path, const Dataset& data, const std::map<std::string, ObjectModel>& objects);
Dataset read_dataset(const std::string& path);

struct PairSummary {
  std::string object_id;
  Vec3 u_dir = Vec3::UnitX();
  int candidates = 0;  // optimized poses sent to validation
  int successes = 0;   // of those, successful pushes
  int augmented_successes = 0;
  int records = 0;
  double seconds = 0.0;
  std::string error;  // set when the pair failed and was skipped
  double success_rate() const { return candidates > 0 ? double(successes) / candidates : 0.0; }
};

struct GenDataResult {
  Dataset dataset;
  std::map<std::string, ObjectModel> objects;
  std::vector<PairSummary> summary;
};

/// Optimize, validate and augment every (object, direction) pair in manifest
/// order. Per-pair failures are logged and skipped. Bytes written from the
/// result do not depend on `jobs`.
GenDataResult generate_dataset(const RunManifest& manifest, int jobs, std::ostream* log = nullptr);

void write_summary_json(const std::string& path, const DatasetHeader& header, const std::vector<PairSummary>& rows);

/// Successful records as training samples (canonical pose, canonical BPS).
/// `fraction` keeps a seeded subset of ceil(fraction * n) of them, at least one.
std::vector<PoseSample> training_samples(const Dataset& data, const std::map<std::string, ObjectModel>& objects,
                                         double fraction, std::uint64_t seed,
                                         const BasisPointSet& basis = default_basis());

/// Loads every object named in the dataset header.
std::map<std::string, ObjectModel> load_dataset_objects(const Dataset& data);

/// n generated poses for the object and direction, in the world frame.
std::vector<HandPose> sample_world_poses(const GeneratorModel& model, const ObjectModel& obj, const Vec3& u_dir, int n,
                                         std::uint64_t seed, int jobs = 1);

/// Candidate source for multi_step_plan backed by the generator. Each call
/// uses a fresh seed stream derived from the call count.
CandidateSource generator_source(const GeneratorModel& model, int n, std::uint64_t seed, int jobs = 1);

/// Candidate source that returns a fixed bank of canonical poses.
CandidateSource bank_source(std::vector<HandPose> canonical_poses);

/// Canonical poses of the successful records (optionally one object only).
std::vector<HandPose> canonical_bank(const Dataset& data, const std::map<std::string, ObjectModel>& objects,
                                     const std::string& object_id = "");

/// JSON writers for the sample, rank and plan outputs.
void write_samples_json(std::ostream& os, const std::vector<HandPose>& poses, const ObjectModel& obj, const Vec3& u_dir,
                        std::uint64_t seed, const std::string& config_hash);
void write_ranking_json(std::ostream& os, const Ranking& ranking, const ObjectModel& obj, const PushTrial& trial,
                        std::uint64_t seed, const std::string& config_hash);
void write_ranking_csv(std::ostream& os, const Ranking& ranking);
void write_plan_json(std::ostream& os, const MultiStepPlan& plan, const Vec2& goal, std::uint64_t seed,
                     const std::string& config_hash);

/// Per-record energies and outcomes for plotting.
void write_dataset_csv(std::ostream& os, const Dataset& data);
/// Per-pair counts.
void write_summary_csv(std::ostream& os, const std::vector<PairSummary>& rows);
/// Summary recomputed from a dataset (stats command).
std::vector<PairSummary> summarize(const Dataset& data);

}  // namespace dexpush
