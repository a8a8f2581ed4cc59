#include "dexpush/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace dexpush;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kDegenerate = 2;

struct Options {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string objects;
  std::string directions;
  std::string config;
  std::string out;
  double fraction = 1.0;
  int n_samples = 200;
  std::string goal;
  std::string start;
  std::string obstacles;
  int jobs = 1;
  std::string plot;
  std::string dataset;
  std::string model;
  std::string bank;
  int restarts = 0;
  int iterations = 0;
  int epochs = 0;
};

std::string object_path(const std::string& token) {
  if (fs::exists(token)) return token;
  const std::string shipped = shipped_object(token);
  if (fs::exists(shipped)) return shipped;
  throw std::invalid_argument("unknown object '" + token + "' (not a file or a shipped object name)");
}

std::vector<std::string> object_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& t : split_list(text)) out.push_back(object_path(t));
  return out;
}

Vec2 parse_point(const std::string& text, const char* what) {
  const auto v = parse_doubles(text);
  if (v.size() != 2) throw std::invalid_argument(std::string(what) + " must be 'x,y'");
  return Vec2(v[0], v[1]);
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_out(const std::string& path) {
  ensure_parent(path);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

KeyValueConfig planner_config(const Options& o) {
  return o.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(o.config);
}

// Candidates come from a trained model or from the successful poses of a dataset.
struct PoseProvider {
  GeneratorModel model;
  bool has_model = false;
  std::vector<HandPose> bank;
  std::string fingerprint;

  static PoseProvider make(const Options& o) {
    PoseProvider p;
    if (o.model.empty() == o.bank.empty()) throw std::invalid_argument("give exactly one of --model or --bank");
    if (!o.model.empty()) {
      p.model = GeneratorModel::load(o.model);
      p.has_model = true;
      p.fingerprint = file_bytes(o.model);
    } else {
      const Dataset d = read_dataset(o.bank);
      p.bank = canonical_bank(d, load_dataset_objects(d));
      if (p.bank.empty()) throw std::invalid_argument("--bank dataset has no successful poses");
      p.fingerprint = file_bytes(o.bank);
    }
    return p;
  }

  std::vector<HandPose> poses(const ObjectModel& obj, const Vec3& u, int n, std::uint64_t seed, int jobs) const {
    if (has_model) return sample_world_poses(model, obj, u, n, seed, jobs);
    const Transform3 back = canonical_frame(obj, u).inverse();
    std::vector<HandPose> out;
    for (const auto& b : bank) out.push_back(transform_pose(back, b));
    return out;
  }

  CandidateSource source(int n, std::uint64_t seed, int jobs) const {
    return has_model ? generator_source(model, n, seed, jobs) : bank_source(bank);
  }
};

ObjectModel single_object(const Options& o) {
  const auto paths = object_list(o.objects);
  if (paths.size() != 1) throw std::invalid_argument("--objects must name exactly one object");
  return load_object(paths.front());
}

Vec3 single_direction(const Options& o) {
  const auto dirs = parse_directions(o.directions.empty() ? "+x" : o.directions);
  if (dirs.size() != 1) throw std::invalid_argument("--directions must name exactly one direction");
  return dirs.front().normalized();
}

int cmd_gen_data(const Options& o) {
  RunManifest m;
  if (!o.config.empty()) m = RunManifest::load(o.config);
  if (o.seed_set) m.seed = o.seed;
  if (!o.objects.empty()) m.objects = object_list(o.objects);
  if (!o.directions.empty()) m.directions = parse_directions(o.directions);
  if (o.restarts > 0) m.restarts = o.restarts;
  if (o.iterations > 0) m.iterations = o.iterations;
  if (!o.out.empty()) m.out = o.out;
  m.validate();

  const GenDataResult res = generate_dataset(m, o.jobs, &std::cerr);
  if (res.dataset.records.empty()) {
    std::cerr << "error: no records produced\n";
    return kError;
  }
  fs::create_directories(m.out);
  const std::string dataset = (fs::path(m.out) / "dataset.jsonl").string();
  write_dataset(dataset, res.dataset, res.objects);
  write_summary_json((fs::path(m.out) / "summary.json").string(), res.dataset.header, res.summary);
  int cand = 0, succ = 0;
  for (const auto& r : res.summary) {
    cand += r.candidates;
    succ += r.successes;
  }
  std::cout << "wrote " << res.dataset.records.size() << " records to " << dataset << "\n"
            << "candidates " << cand << ", successes " << succ << ", success rate "
            << (cand > 0 ? double(succ) / cand : 0.0) << "\n";
  return kOk;
}

int cmd_train(const Options& o) {
  if (o.dataset.empty()) throw std::invalid_argument("train needs --dataset");
  TrainConfig cfg = o.config.empty() ? TrainConfig{} : TrainConfig::load(o.config);
  if (o.epochs > 0) cfg.epochs = o.epochs;
  cfg.validate();
  const Dataset data = read_dataset(o.dataset);
  const auto samples = training_samples(data, load_dataset_objects(data), o.fraction, o.seed);
  std::cerr << "training on " << samples.size() << " poses (fraction " << o.fraction << ")\n";

  std::ostringstream fp;
  fp << std::setprecision(17) << kToolVersion << "\n" << data.header.config_hash << "\n" << o.fraction << "\n";
  const KeyValueConfig kv = cfg.to_config();
  for (const auto& [k, v] : kv.values()) fp << k << "=" << v << "\n";
  const std::string hash = hash_hex(fp.str());

  const TrainResult res = train(samples, cfg, o.seed, [&](int epoch, double loss) {
    if ((epoch + 1) % 10 == 0 || epoch + 1 == cfg.epochs)
      std::cerr << "epoch " << epoch + 1 << "/" << cfg.epochs << " loss " << loss << "\n";
  });
  const std::string dir = o.out.empty() ? "." : o.out;
  fs::create_directories(dir);
  res.model.save((fs::path(dir) / "model.bin").string());
  res.ema.save((fs::path(dir) / "model_ema.bin").string());
  std::ostringstream comment;
  comment << "tool_version=" << kToolVersion << " seed=" << o.seed << " config_hash=" << hash
          << " fraction=" << o.fraction << " samples=" << samples.size();
  write_loss_csv((fs::path(dir) / "loss.csv").string(), res.losses, comment.str());
  std::cout << "wrote model.bin, model_ema.bin and loss.csv (" << res.losses.size() << " steps) to " << dir << "\n";
  return kOk;
}

int cmd_sample(const Options& o) {
  const PoseProvider provider = PoseProvider::make(o);
  const ObjectModel obj = single_object(o);
  const Vec3 u = single_direction(o);
  const auto poses = provider.poses(obj, u, o.n_samples, o.seed, o.jobs);
  const std::string hash = hash_hex(provider.fingerprint + obj.id + direction_label(u) + std::to_string(o.n_samples));
  if (o.out.empty()) {
    write_samples_json(std::cout, poses, obj, u, o.seed, hash);
  } else {
    auto os = open_out(o.out);
    write_samples_json(os, poses, obj, u, o.seed, hash);
    std::cout << "wrote " << poses.size() << " poses to " << o.out << "\n";
  }
  return kOk;
}

int cmd_rank(const Options& o) {
  const PoseProvider provider = PoseProvider::make(o);
  const ObjectModel obj = single_object(o);
  const Vec3 u = single_direction(o);
  const KeyValueConfig pc = planner_config(o);
  const WorkspaceModel ws = WorkspaceModel::from_config(pc);
  const RankWeights weights = RankWeights::from_config(pc);
  const auto kin = std::make_shared<const HandKinematics>(HandKinematics::load(shipped_hand("allegro")));
  const SimConfig sim;
  const PushHand hand = make_push_hand(kin, sim);

  const auto poses = provider.poses(obj, u, o.n_samples, o.seed, o.jobs);
  if (poses.empty()) throw std::invalid_argument("no candidate poses");
  const PushTrial trial = make_trial(obj, u);
  const Ranking ranking = rank_and_select(poses, trial, obj, hand, ws, sim, weights, o.jobs);
  std::ostringstream fp;
  fp << provider.fingerprint << obj.id << direction_label(u) << o.n_samples;
  for (const auto& [k, v] : pc.values()) fp << k << "=" << v << "\n";
  const std::string hash = hash_hex(fp.str());

  if (o.out.empty()) {
    write_ranking_json(std::cout, ranking, obj, trial, o.seed, hash);
  } else {
    auto os = open_out(o.out);
    write_ranking_json(os, ranking, obj, trial, o.seed, hash);
  }
  if (!o.plot.empty()) {
    auto os = open_out(o.plot);
    write_ranking_csv(os, ranking);
  }
  if (ranking.empty()) {
    std::cerr << "no feasible pose among " << poses.size() << " candidates\n";
    return kDegenerate;
  }
  const RankedPose& b = ranking.best();
  std::cerr << ranking.ranked.size() << " feasible of " << poses.size() << "; best #" << b.index << " V " << b.score
            << " (l_goal " << b.l_goal << ", l_coll " << b.l_coll << ", l_dir " << b.l_dir << ")\n";
  return kOk;
}

int cmd_plan(const Options& o) {
  if (o.goal.empty()) throw std::invalid_argument("plan needs --goal x,y");
  const PoseProvider provider = PoseProvider::make(o);
  ObjectModel obj = single_object(o);
  if (!o.start.empty()) {
    const Vec2 s = parse_point(o.start, "--start");
    Transform3 t;
    t.translation = Vec3(s.x() - obj.center().x(), s.y() - obj.center().y(), 0.0);
    obj = moved_object(obj, t);
  }
  const Vec2 goal = parse_point(o.goal, "--goal");
  const std::vector<Disc> obstacles = o.obstacles.empty() ? std::vector<Disc>{} : load_obstacles(o.obstacles);
  const KeyValueConfig pc = planner_config(o);
  MultiStepConfig cfg;
  cfg.workspace = WorkspaceModel::from_config(pc);
  cfg.weights = RankWeights::from_config(pc);
  cfg.max_push = pc.get_double("max_push", cfg.max_push);
  cfg.goal_tolerance = pc.get_double("goal_tolerance", cfg.goal_tolerance);
  cfg.max_corrections = int(pc.get_int("max_corrections", cfg.max_corrections));
  cfg.rrt.iterations = int(pc.get_int("rrt_iterations", cfg.rrt.iterations));
  cfg.rrt.step = pc.get_double("rrt_step", cfg.rrt.step);
  cfg.rrt.goal_bias = pc.get_double("rrt_goal_bias", cfg.rrt.goal_bias);
  cfg.jobs = o.jobs;
  const auto kin = std::make_shared<const HandKinematics>(HandKinematics::load(shipped_hand("allegro")));
  const PushHand hand = make_push_hand(kin, cfg.sim);

  const MultiStepPlan plan = multi_step_plan(obj, obj.center().head<2>(), goal, obstacles,
                                             provider.source(o.n_samples, derive_seed(o.seed, "plan-samples"), o.jobs),
                                             hand, cfg, o.seed);
  std::ostringstream fp;
  fp << provider.fingerprint << obj.id << o.goal << o.start << o.n_samples;
  if (!o.obstacles.empty()) fp << file_bytes(o.obstacles);
  for (const auto& [k, v] : pc.values()) fp << k << "=" << v << "\n";
  const std::string hash = hash_hex(fp.str());
  if (o.out.empty()) {
    write_plan_json(std::cout, plan, goal, o.seed, hash);
  } else {
    auto os = open_out(o.out);
    write_plan_json(os, plan, goal, o.seed, hash);
  }
  std::cerr << "status " << to_string(plan.status) << ", " << plan.pushes.size() << " pushes, final error "
            << (plan.final_position - goal).norm() << " m\n";
  return plan.status == MultiStepPlan::Status::complete ? kOk : kDegenerate;
}

int cmd_stats(const Options& o) {
  if (o.dataset.empty()) throw std::invalid_argument("stats needs --dataset");
  const Dataset d = read_dataset(o.dataset);
  const auto rows = summarize(d);
  std::cout << "dataset " << o.dataset << " (seed " << d.header.seed << ", config " << d.header.config_hash << ")\n";
  int cand = 0, succ = 0, aug = 0;
  for (const auto& r : rows) {
    std::cout << "  " << std::left << std::setw(14) << r.object_id << std::setw(6) << direction_label(r.u_dir)
              << r.successes << "/" << r.candidates << " successful, " << r.augmented_successes
              << " augmented successes, " << r.records << " records\n";
    cand += r.candidates;
    succ += r.successes;
    aug += r.augmented_successes;
  }
  std::cout << "total: " << d.records.size() << " records, " << succ << "/" << cand << " optimized poses successful ("
            << (cand > 0 ? 100.0 * succ / cand : 0.0) << "%), " << succ + aug << " successful records\n";
  if (!o.out.empty()) {
    auto os = open_out(o.out);
    write_summary_csv(os, rows);
  }
  return kOk;
}

int cmd_plot_data(const Options& o) {
  if (o.dataset.empty()) throw std::invalid_argument("plot-data needs --dataset");
  const Dataset d = read_dataset(o.dataset);
  const std::string dir = o.out.empty() ? "." : o.out;
  fs::create_directories(dir);
  {
    std::ofstream os((fs::path(dir) / "records.csv").string());
    write_dataset_csv(os, d);
  }
  {
    std::ofstream os((fs::path(dir) / "pairs.csv").string());
    write_summary_csv(os, summarize(d));
  }
  std::cout << "wrote records.csv and pairs.csv to " << dir << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pushing hand pose generation, ranking and planning"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Options o;

  auto seed = [&](CLI::App* c) {
    c->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { o.seed = v, o.seed_set = true; }, "Root random seed");
  };
  auto common = [&](CLI::App* c) {
    seed(c);
    c->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen-data", "Optimize, validate and augment pushing poses");
  common(gen);
  gen->add_option("--config", o.config, "Run manifest");
  gen->add_option("--objects", o.objects, "Object manifests or shipped names, comma separated");
  gen->add_option("--directions", o.directions, "Push directions (+x,-x,+y,-y or degrees)");
  gen->add_option("--restarts", o.restarts, "Override optimizer restarts");
  gen->add_option("--iterations", o.iterations, "Override optimizer iterations");
  gen->add_option("--out", o.out, "Output directory");

  auto* tr = app.add_subcommand("train", "Train the pose generator");
  common(tr);
  tr->add_option("--dataset", o.dataset, "Dataset file")->required();
  tr->add_option("--config", o.config, "Training config");
  tr->add_option("--fraction", o.fraction, "Fraction of successful records to train on")->check(CLI::Range(1e-9, 1.0));
  tr->add_option("--epochs", o.epochs, "Override epochs");
  tr->add_option("--out", o.out, "Output directory");

  auto pose_source = [&](CLI::App* c) {
    c->add_option("--model", o.model, "Generator model file");
    c->add_option("--bank", o.bank, "Dataset whose successful poses are the candidates");
    c->add_option("--objects", o.objects, "Object manifest or shipped name")->required();
    c->add_option("--n-samples", o.n_samples, "Poses to sample")->check(CLI::PositiveNumber);
    c->add_option("--out", o.out, "Output file");
  };
  auto* sm = app.add_subcommand("sample", "Sample poses for an object and direction");
  common(sm);
  pose_source(sm);
  sm->add_option("--directions", o.directions, "Push direction");

  auto* rk = app.add_subcommand("rank", "Sample, check feasibility, simulate and rank");
  common(rk);
  pose_source(rk);
  rk->add_option("--directions", o.directions, "Push direction");
  rk->add_option("--config", o.config, "Planner config (weights and workspace)");
  rk->add_option("--plot", o.plot, "Per-pose CSV of V and its terms");

  auto* pl = app.add_subcommand("plan", "Multi-step push plan around obstacles");
  common(pl);
  pose_source(pl);
  pl->add_option("--goal", o.goal, "Goal x,y")->required();
  pl->add_option("--start", o.start, "Start x,y of the object center (default: its placement)");
  pl->add_option("--obstacles", o.obstacles, "Obstacle file");
  pl->add_option("--config", o.config, "Planner config");

  auto* st = app.add_subcommand("stats", "Dataset statistics");
  st->add_option("--dataset", o.dataset, "Dataset file")->required();
  st->add_option("--out", o.out, "Per-pair CSV");

  auto* pd = app.add_subcommand("plot-data", "CSV files for plotting a dataset");
  pd->add_option("--dataset", o.dataset, "Dataset file")->required();
  pd->add_option("--out", o.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kError;
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*tr) return cmd_train(o);
    if (*sm) return cmd_sample(o);
    if (*rk) return cmd_rank(o);
    if (*pl) return cmd_plan(o);
    if (*st) return cmd_stats(o);
    if (*pd) return cmd_plot_data(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
