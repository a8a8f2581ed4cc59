#include "dexpush/pipeline.hpp"

#include "dexpush/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dexpush {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd json_vec(const json& a) {
  Eigen::VectorXd v(Eigen::Index(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[Eigen::Index(i)] = a[i].get<double>();
  return v;
}

json header_json(const char* kind, std::uint64_t seed, const std::string& config_hash) {
  return json{{"type", kind}, {"tool_version", kToolVersion}, {"seed", seed}, {"config_hash", config_hash}};
}

std::string fmt_seconds(double s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << s << " s";
  return os.str();
}

}  // namespace

Vec3 parse_direction(const std::string& token) {
  if (token == "+x" || token == "x") return Vec3::UnitX();
  if (token == "-x") return -Vec3::UnitX();
  if (token == "+y" || token == "y") return Vec3::UnitY();
  if (token == "-y") return -Vec3::UnitY();
  std::size_t used = 0;
  double deg = 0.0;
  try {
    deg = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != token.size() || !std::isfinite(deg))
    throw std::invalid_argument("bad direction '" + token + "' (use +x, -x, +y, -y or degrees)");
  const double a = deg * std::numbers::pi / 180.0;
  return Vec3(std::cos(a), std::sin(a), 0.0);
}

std::vector<Vec3> parse_directions(const std::string& text) {
  std::vector<Vec3> out;
  for (const auto& tok : split_list(text)) out.push_back(parse_direction(tok));
  if (out.empty()) throw std::invalid_argument("empty direction list");
  return out;
}

std::string direction_label(const Vec3& u) {
  if (u.isApprox(Vec3::UnitX())) return "+x";
  if (u.isApprox(-Vec3::UnitX())) return "-x";
  if (u.isApprox(Vec3::UnitY())) return "+y";
  if (u.isApprox(-Vec3::UnitY())) return "-y";
  std::ostringstream os;
  os << std::setprecision(6) << std::atan2(u.y(), u.x()) * 180.0 / std::numbers::pi;
  return os.str();
}

RunManifest RunManifest::from_config(const KeyValueConfig& cfg, const std::string& base_dir) {
  RunManifest m;
  m.seed = std::uint64_t(cfg.get_int("seed", 0));
  if (cfg.has("objects"))
    for (const auto& p : cfg.get_strings("objects")) m.objects.push_back(resolve(base_dir, p));
  if (cfg.has("directions")) m.directions = parse_directions(cfg.get_string("directions"));
  m.hand = cfg.get_string("hand", m.hand);
  if (m.hand.find('/') != std::string::npos || m.hand.find(".hand") != std::string::npos)
    m.hand = resolve(base_dir, m.hand);
  m.weights = resolve(base_dir, cfg.get_string("weights", ""));
  m.optimizer = resolve(base_dir, cfg.get_string("optimizer", ""));
  m.restarts = int(cfg.get_int("restarts", 0));
  m.iterations = int(cfg.get_int("iterations", 0));
  m.push_length = cfg.get_double("push_length", m.push_length);
  m.augment_count = int(cfg.get_int("augment_count", m.augment_count));
  m.out = resolve(base_dir, cfg.get_string("out", m.out));
  return m;
}

RunManifest RunManifest::load(const std::string& path) {
  return from_config(KeyValueConfig::load(path), fs::path(path).parent_path().string());
}

std::string RunManifest::hand_path() const {
  if (hand.find('/') != std::string::npos || hand.find(".hand") != std::string::npos) return hand;
  return shipped_hand(hand);
}

OptimizerConfig RunManifest::optimizer_config() const {
  OptimizerConfig c = optimizer.empty() ? OptimizerConfig{} : OptimizerConfig::load(optimizer);
  if (restarts > 0) c.restarts = restarts;
  if (iterations > 0) c.iterations = iterations;
  c.validate();
  return c;
}

EnergyWeights RunManifest::energy_weights() const { return weights.empty() ? EnergyWeights{} : EnergyWeights::load(weights); }

void RunManifest::validate() const {
  if (objects.empty()) throw std::invalid_argument("manifest: no objects");
  for (const auto& p : objects)
    if (!fs::exists(p)) throw std::invalid_argument("manifest: object file not found: " + p);
  for (const auto& p : {weights, optimizer})
    if (!p.empty() && !fs::exists(p)) throw std::invalid_argument("manifest: config file not found: " + p);
  if (!fs::exists(hand_path())) throw std::invalid_argument("manifest: hand file not found: " + hand_path());
  if (directions.empty()) throw std::invalid_argument("manifest: no directions");
  for (const auto& u : directions)
    if (std::abs(u.z()) > 1e-12 || u.norm() < 1e-12) throw std::invalid_argument("manifest: directions must be horizontal");
  if (!(push_length > 0.0)) throw std::invalid_argument("manifest: push_length must be positive");
  if (augment_count < 0) throw std::invalid_argument("manifest: augment_count must be >= 0");
  if (restarts < 0 || iterations < 0) throw std::invalid_argument("manifest: restarts and iterations must be >= 0");
}

std::string RunManifest::canonical_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "tool_version=" << kToolVersion << "\nseed=" << seed << "\nhand=" << read_file(hand_path()) << "\n";
  for (const auto& p : objects) os << "object=" << read_file(p) << "\n";
  for (const auto& u : directions) os << "direction=" << u.x() << "," << u.y() << "\n";
  os << "push_length=" << push_length << "\naugment_count=" << augment_count << "\n";
  const KeyValueConfig opt = optimizer_config().to_config(), w = energy_weights().to_config();
  for (const auto& [k, v] : opt.values())
    if (k != "jobs") os << "optimizer." << k << "=" << v << "\n";
  for (const auto& [k, v] : w.values()) os << "weights." << k << "=" << v << "\n";
  return os.str();
}

std::string hash_hex(const std::string& text) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(text);
  return os.str();
}

Transform3 canonical_frame(const ObjectModel& obj, const Vec3& u_dir) {
  Transform3 t = direction_frame(u_dir);
  const PointCloud rotated = transformed(obj.cloud, t);
  if (rotated.rows() == 0) throw std::invalid_argument("canonical_frame: object has no surface cloud");
  t.translation = -Vec3(rotated.col(0).mean(), rotated.col(1).mean(), rotated.col(2).minCoeff());
  return t;
}

const BasisPointSet& default_basis() {
  static const BasisPointSet basis = generate_basis(0);
  return basis;
}

BpsEncoding canonical_condition(const ObjectModel& obj, const Vec3& u_dir, const BasisPointSet& basis) {
  return encode(basis, canonicalize(transformed(obj.cloud, direction_frame(u_dir))));
}

// ---------------------------------------------------------------------------
// Dataset files

namespace {

json energy_json(const EnergyBreakdown& e) {
  const auto c = e.components();
  json j;
  for (std::size_t i = 0; i < EnergyBreakdown::kNames.size(); ++i) j[EnergyBreakdown::kNames[i]] = c[Eigen::Index(i)];
  j["total"] = e.total;
  return j;
}

EnergyBreakdown json_energy(const json& j) {
  EnergyBreakdown e;
  e.e_fc = j.at("e_fc");
  e.e_dis = j.at("e_dis");
  e.e_joint = j.at("e_joint");
  e.e_pen_obj = j.at("e_pen_obj");
  e.e_pen_table = j.at("e_pen_table");
  e.e_pen_self = j.at("e_pen_self");
  e.e_dir = j.at("e_dir");
  e.e_arm = j.at("e_arm");
  e.total = j.at("total");
  return e;
}

json record_json(const DatasetRecord& r, const ObjectModel* obj) {
  json j;
  j["object_id"] = r.object_id;
  j["u_dir"] = vec_json(r.u_dir);
  j["pose"] = vec_json(encode_pose(r.pose));
  if (obj) j["pose_canonical"] = vec_json(encode_pose(transform_pose(canonical_frame(*obj, r.u_dir), r.pose)));
  j["energy"] = energy_json(r.energy);
  j["position_error"] = r.outcome.position_error;
  j["yaw_change"] = r.outcome.yaw_change;
  j["success"] = r.outcome.success;
  j["toppled"] = r.outcome.toppled;
  j["lost_contact"] = r.outcome.lost_contact;
  j["table_contact"] = r.outcome.table_contact;
  j["augmented"] = r.augmented;
  j["source"] = r.source;
  j["retreat"] = r.retreat;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

DatasetRecord json_record(const json& j) {
  DatasetRecord r;
  r.object_id = j.at("object_id").get<std::string>();
  r.u_dir = json_vec(j.at("u_dir"));
  r.pose = decode_pose(json_vec(j.at("pose")));
  r.energy = json_energy(j.at("energy"));
  r.outcome.position_error = j.at("position_error");
  r.outcome.yaw_change = j.at("yaw_change");
  r.outcome.success = j.at("success");
  r.outcome.toppled = j.at("toppled");
  r.outcome.lost_contact = j.at("lost_contact");
  r.outcome.table_contact = j.at("table_contact");
  r.augmented = j.at("augmented");
  r.source = j.at("source");
  r.retreat = j.at("retreat");
  r.error = j.value("error", std::string());
  return r;
}

}  // namespace

void write_dataset(std::ostream& os, const Dataset& data, const std::map<std::string, ObjectModel>& objects) {
  json h = header_json("dataset", data.header.seed, data.header.config_hash);
  h["tool_version"] = data.header.tool_version;
  h["hand"] = data.header.hand;
  h["objects"] = data.header.objects;
  h["records"] = data.records.size();
  os << h.dump() << "\n";
  for (const auto& r : data.records) {
    const auto it = objects.find(r.object_id);
    os << record_json(r, it == objects.end() ? nullptr : &it->second).dump() << "\n";
  }
}

void write_dataset(const std::string& path, const Dataset& data, const std::map<std::string, ObjectModel>& objects) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_dataset(os, data, objects);
  if (!os) throw std::runtime_error("write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  Dataset d;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      if (line_no == 1) {
        if (j.value("type", "") != "dataset") throw std::runtime_error("missing dataset header");
        d.header.tool_version = j.at("tool_version");
        d.header.seed = j.at("seed");
        d.header.config_hash = j.at("config_hash");
        d.header.hand = j.value("hand", "allegro");
        d.header.objects = j.at("objects").get<std::map<std::string, std::string>>();
        continue;
      }
      d.records.push_back(json_record(j));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (line_no == 0) throw std::runtime_error(path + ": empty dataset file");
  return d;
}

// ---------------------------------------------------------------------------
// gen-data

GenDataResult generate_dataset(const RunManifest& manifest, int jobs, std::ostream* log) {
  manifest.validate();
  OptimizerConfig opt = manifest.optimizer_config();
  opt.jobs = jobs;
  const EnergyWeights weights = manifest.energy_weights();
  const auto kin = std::make_shared<const HandKinematics>(HandKinematics::load(manifest.hand_path()));
  ValidateConfig vcfg;
  vcfg.augment_count = manifest.augment_count;
  vcfg.jobs = jobs;
  const PushHand hand = make_push_hand(kin, vcfg.sim);

  GenDataResult res;
  res.dataset.header.seed = manifest.seed;
  res.dataset.header.config_hash = hash_hex(manifest.canonical_text());
  res.dataset.header.hand = manifest.hand;
  const std::uint64_t stage = derive_seed(manifest.seed, "gen-data");

  for (const auto& path : manifest.objects) {
    ObjectModel obj;
    try {
      obj = load_object(path);
    } catch (const std::exception& e) {
      if (log) *log << "skipping " << path << ": " << e.what() << "\n";
      PairSummary row;
      row.object_id = fs::path(path).stem().string();
      row.error = e.what();
      res.summary.push_back(row);
      continue;
    }
    if (res.objects.count(obj.id)) throw std::invalid_argument("duplicate object id '" + obj.id + "' in manifest");
    res.dataset.header.objects[obj.id] = path;
    for (const Vec3& u_raw : manifest.directions) {
      const Vec3 u = u_raw.normalized();
      PairSummary row;
      row.object_id = obj.id;
      row.u_dir = u;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const std::uint64_t seed = derive_seed(stage, obj.id + "/" + direction_label(u));
        const std::vector<ChainResult> chains = optimize(obj, kin, u, opt, weights, seed);
        std::vector<CandidatePose> cands;
        for (const auto& c : chains) cands.push_back({c.pose, c.energy});
        const PushTrial trial = make_trial(obj, u, manifest.push_length);
        std::vector<DatasetRecord> recs = validate_batch(cands, hand, obj, trial, vcfg);
        row.candidates = int(cands.size());
        for (const auto& r : recs) {
          if (!r.outcome.success) continue;
          (r.augmented ? row.augmented_successes : row.successes) += 1;
        }
        row.records = int(recs.size());
        for (auto& r : recs) res.dataset.records.push_back(std::move(r));
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (log) {
        *log << obj.id << " " << direction_label(u) << ": ";
        if (row.error.empty())
          *log << row.successes << "/" << row.candidates << " successful, " << row.augmented_successes
               << " augmented successes, " << row.records << " records (" << fmt_seconds(row.seconds) << ")\n";
        else
          *log << "failed: " << row.error << "\n";
      }
      res.summary.push_back(row);
    }
    res.objects.emplace(obj.id, std::move(obj));
  }
  return res;
}

void write_summary_json(const std::string& path, const DatasetHeader& header, const std::vector<PairSummary>& rows) {
  json j = header_json("summary", header.seed, header.config_hash);
  json arr = json::array();
  int cand = 0, succ = 0;
  for (const auto& r : rows) {
    json e{{"object_id", r.object_id},           {"u_dir", vec_json(r.u_dir)},
           {"candidates", r.candidates},         {"successes", r.successes},
           {"augmented_successes", r.augmented_successes}, {"records", r.records},
           {"success_rate", r.success_rate()}};
    if (!r.error.empty()) e["error"] = r.error;
    arr.push_back(e);
    cand += r.candidates;
    succ += r.successes;
  }
  j["pairs"] = arr;
  j["candidates"] = cand;
  j["successes"] = succ;
  j["success_rate"] = cand > 0 ? double(succ) / cand : 0.0;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << "\n";
}

std::vector<PairSummary> summarize(const Dataset& data) {
  std::vector<PairSummary> rows;
  for (const auto& r : data.records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const PairSummary& s) {
      return s.object_id == r.object_id && s.u_dir.isApprox(r.u_dir);
    });
    if (it == rows.end()) {
      rows.push_back(PairSummary{});
      it = rows.end() - 1;
      it->object_id = r.object_id;
      it->u_dir = r.u_dir;
    }
    ++it->records;
    if (!r.augmented) ++it->candidates;
    if (r.outcome.success) (r.augmented ? it->augmented_successes : it->successes) += 1;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Training data and sampling

std::map<std::string, ObjectModel> load_dataset_objects(const Dataset& data) {
  std::map<std::string, ObjectModel> out;
  for (const auto& [id, path] : data.header.objects) {
    ObjectModel obj = load_object(path);
    if (obj.id != id) throw std::runtime_error("object file " + path + " has id '" + obj.id + "', expected '" + id + "'");
    out.emplace(id, std::move(obj));
  }
  return out;
}

std::vector<PoseSample> training_samples(const Dataset& data, const std::map<std::string, ObjectModel>& objects,
                                         double fraction, std::uint64_t seed, const BasisPointSet& basis) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must be in (0, 1]");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.records.size(); ++i)
    if (data.records[i].outcome.success) idx.push_back(i);
  if (idx.empty()) throw std::invalid_argument("dataset has no successful records");
  // Shuffle once and keep a prefix, so smaller fractions are subsets of larger ones.
  Rng rng(derive_seed(seed, "fraction"));
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.next_u64() % i]);
  const auto keep = std::max<std::size_t>(1, std::size_t(std::ceil(fraction * double(idx.size()) - 1e-9)));
  idx.resize(std::min(keep, idx.size()));
  std::sort(idx.begin(), idx.end());

  std::map<std::string, BpsEncoding> cache;
  std::vector<PoseSample> out;
  for (std::size_t i : idx) {
    const DatasetRecord& r = data.records[i];
    const auto it = objects.find(r.object_id);
    if (it == objects.end()) throw std::invalid_argument("no object for record id '" + r.object_id + "'");
    std::ostringstream key;
    key << std::setprecision(17) << r.object_id << "|" << r.u_dir.x() << "," << r.u_dir.y();
    auto c = cache.find(key.str());
    if (c == cache.end()) c = cache.emplace(key.str(), canonical_condition(it->second, r.u_dir, basis)).first;
    PoseSample s;
    s.pose25 = encode_pose(transform_pose(canonical_frame(it->second, r.u_dir), r.pose));
    s.condition = c->second;
    s.object_id = r.object_id;
    s.u_dir = r.u_dir;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<HandPose> sample_world_poses(const GeneratorModel& model, const ObjectModel& obj, const Vec3& u_dir, int n,
                                         std::uint64_t seed, int jobs) {
  const Transform3 back = canonical_frame(obj, u_dir).inverse();
  const auto raw = sample(model, canonical_condition(obj, u_dir), n, seed, jobs);
  std::vector<HandPose> out;
  out.reserve(raw.size());
  for (const auto& v : raw) out.push_back(transform_pose(back, decode_pose(v)));
  return out;
}

CandidateSource generator_source(const GeneratorModel& model, int n, std::uint64_t seed, int jobs) {
  auto calls = std::make_shared<std::uint64_t>(0);
  return [&model, n, seed, jobs, calls](const ObjectModel& canonical, int) {
    return sample_world_poses(model, canonical, Vec3::UnitX(), n, derive_seed(seed, (*calls)++), jobs);
  };
}

CandidateSource bank_source(std::vector<HandPose> canonical_poses) {
  auto bank = std::make_shared<const std::vector<HandPose>>(std::move(canonical_poses));
  return [bank](const ObjectModel& canonical, int) {
    const Transform3 back = canonical_frame(canonical, Vec3::UnitX()).inverse();
    std::vector<HandPose> out;
    out.reserve(bank->size());
    for (const auto& p : *bank) out.push_back(transform_pose(back, p));
    return out;
  };
}

std::vector<HandPose> canonical_bank(const Dataset& data, const std::map<std::string, ObjectModel>& objects,
                                     const std::string& object_id) {
  std::vector<HandPose> out;
  for (const auto& r : data.records) {
    if (!r.outcome.success || (!object_id.empty() && r.object_id != object_id)) continue;
    const auto it = objects.find(r.object_id);
    if (it == objects.end()) throw std::invalid_argument("no object for record id '" + r.object_id + "'");
    out.push_back(transform_pose(canonical_frame(it->second, r.u_dir), r.pose));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Outputs

void write_samples_json(std::ostream& os, const std::vector<HandPose>& poses, const ObjectModel& obj, const Vec3& u_dir,
                        std::uint64_t seed, const std::string& config_hash) {
  json j = header_json("samples", seed, config_hash);
  j["object_id"] = obj.id;
  j["u_dir"] = vec_json(u_dir);
  json arr = json::array();
  for (const auto& p : poses) arr.push_back(vec_json(encode_pose(p)));
  j["poses"] = arr;
  os << j.dump(1) << "\n";
}

namespace {

json ranked_json(const RankedPose& r, int rank) {
  return json{{"rank", rank},
              {"index", r.index},
              {"V", r.score},
              {"l_goal", r.l_goal},
              {"l_coll", r.l_coll},
              {"l_dir", r.l_dir},
              {"retreat", r.retreat},
              {"success", r.outcome.success},
              {"yaw_change", r.outcome.yaw_change},
              {"pose", vec_json(encode_pose(r.pose))}};
}

}  // namespace

void write_ranking_json(std::ostream& os, const Ranking& ranking, const ObjectModel& obj, const PushTrial& trial,
                        std::uint64_t seed, const std::string& config_hash) {
  json j = header_json("ranking", seed, config_hash);
  j["object_id"] = obj.id;
  j["u_dir"] = vec_json(trial.u_dir);
  j["push_length"] = trial.push_length;
  j["status"] = ranking.empty() ? "no_feasible_pose" : "ok";
  json ranked = json::array();
  for (std::size_t i = 0; i < ranking.ranked.size(); ++i) ranked.push_back(ranked_json(ranking.ranked[i], int(i) + 1));
  j["ranked"] = ranked;
  json dropped = json::array();
  for (const auto& d : ranking.dropped) dropped.push_back(json{{"index", d.index}, {"reason", d.reason}});
  j["dropped"] = dropped;
  os << j.dump(1) << "\n";
}

void write_ranking_csv(std::ostream& os, const Ranking& ranking) {
  os << std::setprecision(10) << "rank,index,V,l_goal,l_coll,l_dir,success\n";
  for (std::size_t i = 0; i < ranking.ranked.size(); ++i) {
    const auto& r = ranking.ranked[i];
    os << i + 1 << "," << r.index << "," << r.score << "," << r.l_goal << "," << r.l_coll << "," << r.l_dir << ","
       << (r.outcome.success ? 1 : 0) << "\n";
  }
}

void write_plan_json(std::ostream& os, const MultiStepPlan& plan, const Vec2& goal, std::uint64_t seed,
                     const std::string& config_hash) {
  json j = header_json("plan", seed, config_hash);
  j["status"] = to_string(plan.status);
  j["goal"] = vec_json(goal);
  json path{{"found", plan.path.found}, {"cost", plan.path.cost}, {"tree_size", plan.path.tree_size}};
  json wps = json::array();
  for (const auto& w : plan.path.waypoints) wps.push_back(vec_json(w));
  path["waypoints"] = wps;
  path["edge_costs"] = plan.path.edge_costs;
  j["path"] = path;
  json obs = json::array();
  for (const auto& d : plan.path.obstacles) obs.push_back(json{{"center", vec_json(d.center)}, {"radius", d.radius}});
  j["obstacles"] = obs;
  json pushes = json::array();
  for (const auto& s : plan.pushes) {
    json p = ranked_json(s.selected, 1);
    p.erase("rank");
    p["edge"] = s.edge;
    p["from"] = vec_json(s.from);
    p["to"] = vec_json(s.to);
    p["u_dir"] = vec_json(s.u_dir);
    p["length"] = s.length;
    p["object_after"] = vec_json(s.object_after);
    pushes.push_back(p);
  }
  j["pushes"] = pushes;
  j["blocking_edge"] = plan.blocking_edge;
  j["final_position"] = vec_json(plan.final_position);
  j["final_error"] = (plan.final_position - goal).norm();
  os << j.dump(1) << "\n";
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  os << std::setprecision(10) << "object_id,u_x,u_y,source,augmented,success,position_error,yaw_change,toppled,"
                                 "table_contact";
  for (const char* n : EnergyBreakdown::kNames) os << "," << n;
  os << ",total\n";
  for (const auto& r : data.records) {
    os << r.object_id << "," << r.u_dir.x() << "," << r.u_dir.y() << "," << r.source << "," << int(r.augmented) << ","
       << int(r.outcome.success) << "," << r.outcome.position_error << "," << r.outcome.yaw_change << ","
       << int(r.outcome.toppled) << "," << int(r.outcome.table_contact);
    const auto c = r.energy.components();
    for (Eigen::Index i = 0; i < c.size(); ++i) os << "," << c[i];
    os << "," << r.energy.total << "\n";
  }
}

void write_summary_csv(std::ostream& os, const std::vector<PairSummary>& rows) {
  os << std::setprecision(10) << "object_id,u_x,u_y,candidates,successes,augmented_successes,records,success_rate\n";
  for (const auto& r : rows)
    os << r.object_id << "," << r.u_dir.x() << "," << r.u_dir.y() << "," << r.candidates << "," << r.successes << ","
       << r.augmented_successes << "," << r.records << "," << r.success_rate() << "\n";
}

}  // namespace dexpush
