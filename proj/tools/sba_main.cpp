#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "sba/bench.hpp"
#include "sba/engine.hpp"
#include "sba/entropy.hpp"
#include "sba/io.hpp"
#include "sba/lsh.hpp"
#include "sba/population.hpp"
#include "sba/sampling.hpp"
#include "sba/service.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitRejected = 2;

std::atomic<bool> g_interrupted{false};

void handle_signal(int) { g_interrupted.store(true); }

struct CryptoFlags {
  std::string hash_mode = "plain_hash";
  bool domain_separation = true;
  std::string prf_key_hex;

  void attach(CLI::App& cmd) {
    cmd.add_option("--hash-mode", hash_mode, "plain_hash or keyed_prf")
        ->check(CLI::IsMember({"plain_hash", "keyed_prf", "plain", "prf"}));
    cmd.add_flag("--domain-separation,!--no-domain-separation", domain_separation,
                 "mix the subset index into each hash (default on)");
    cmd.add_option("--prf-key-hex", prf_key_hex, "32-byte hex key for keyed_prf mode");
  }

  sba::HashMode mode() const { return sba::hash_mode_from_string(hash_mode); }

  std::optional<sba::SealedKeyProvider> key() const {
    if (mode() != sba::HashMode::keyed_prf) return std::nullopt;
    if (prf_key_hex.empty())
      throw std::invalid_argument("keyed_prf mode requires --prf-key-hex");
    return sba::SealedKeyProvider::from_hex(prf_key_hex);
  }

  sba::DigestConfig digest_config(const std::optional<sba::SealedKeyProvider>& key) const {
    return sba::DigestConfig{mode(), domain_separation, key ? &*key : nullptr};
  }
};

/// Converts template-level samples to bit strings through a seeded
/// hyperplane bank; bit-level samples pass through unchanged.
std::vector<std::pair<sba::IdentityId, sba::BitString>> session_bits(
    const std::vector<sba::LabeledSample>& samples, sba::Session session, uint32_t n,
    uint64_t bank_seed) {
  std::optional<sba::HyperplaneBank> bank;
  std::vector<std::pair<sba::IdentityId, sba::BitString>> out;
  for (const auto& s : samples) {
    if (s.session != session) continue;
    if (s.is_bits()) {
      if (s.bits().length() != n)
        throw std::invalid_argument("sample length does not match plan n");
      out.emplace_back(s.id, s.bits());
    } else {
      const auto dim = static_cast<uint32_t>(s.tmpl().coords.size());
      if (!bank) bank = sba::build_bank(dim, n, bank_seed);
      out.emplace_back(s.id, sba::lsh_project(s.tmpl(), *bank));
    }
  }
  return out;
}

sba::ShardedStore open_or_create_store(const std::filesystem::path& path,
                                       uint32_t capacity) {
  if (std::filesystem::exists(path)) return sba::load_store(path);
  return sba::ShardedStore(capacity);
}

template <typename T>
T parse_number(const std::string& value) {
  size_t pos = 0;
  T out;
  if constexpr (std::is_same_v<T, double>)
    out = std::stod(value, &pos);
  else
    out = static_cast<T>(std::stoull(value, &pos));
  if (pos != value.size()) throw std::invalid_argument("bad numeric value: " + value);
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& value) {
  std::vector<T> out;
  std::string token;
  std::istringstream in(value);
  while (std::getline(in, token, ',')) {
    std::istringstream spaces(token);
    std::string piece;
    while (spaces >> piece) out.push_back(parse_number<T>(piece));
  }
  if (out.empty()) throw std::invalid_argument("empty list value");
  return out;
}

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw std::invalid_argument("bad boolean value: " + value);
}

/// Applies a plain key=value config file to the experiment configuration.
/// Keys are named exactly after the bench flags; command-line flags win, so
/// any key in `overridden` is skipped.
void apply_bench_config(const std::string& path, sba::ExperimentConfig& cfg,
                        std::string& hash_mode, std::vector<std::string>& experiments,
                        std::string& out_path,
                        const std::function<bool(const std::string&)>& overridden) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);

  const std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"sizes", [&](const std::string& v) { cfg.sizes = parse_list<uint32_t>(v); }},
      {"fn-probes", [&](const std::string& v) { cfg.fn_probe_count = parse_number<uint32_t>(v); }},
      {"fp-probes", [&](const std::string& v) { cfg.fp_probe_count = parse_number<uint32_t>(v); }},
      {"trials", [&](const std::string& v) { cfg.trials = parse_number<uint32_t>(v); }},
      {"k-grid", [&](const std::string& v) { cfg.k_grid = parse_list<uint32_t>(v); }},
      {"tau-grid", [&](const std::string& v) { cfg.tau_grid = parse_list<uint32_t>(v); }},
      {"zeta-grid", [&](const std::string& v) { cfg.zeta_grid = parse_list<double>(v); }},
      {"p-same-grid", [&](const std::string& v) { cfg.p_same_grid = parse_list<double>(v); }},
      {"n", [&](const std::string& v) { cfg.n = parse_number<uint32_t>(v); }},
      {"m", [&](const std::string& v) { cfg.m = parse_number<uint32_t>(v); }},
      {"capacity", [&](const std::string& v) { cfg.shard_capacity = parse_number<uint32_t>(v); }},
      {"hash-mode", [&](const std::string& v) { hash_mode = v; }},
      {"domain-separation", [&](const std::string& v) { cfg.domain_separation = parse_bool(v); }},
      {"prf-key-hex", [&](const std::string& v) { cfg.prf_key_hex = v; }},
      {"template-dim", [&](const std::string& v) { cfg.template_dim = parse_number<uint32_t>(v); }},
      {"sigma-t", [&](const std::string& v) { cfg.sigma_t = parse_number<double>(v); }},
      {"baseline-threshold",
       [&](const std::string& v) { cfg.baseline_threshold = parse_number<double>(v); }},
      {"seed", [&](const std::string& v) { cfg.seed = parse_number<uint64_t>(v); }},
      {"experiments",
       [&](const std::string& v) {
         experiments.clear();
         std::string token;
         std::istringstream items(v);
         while (std::getline(items, token, ',')) experiments.push_back(token);
       }},
      {"out", [&](const std::string& v) { out_path = v; }},
  };

  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto trim = [](std::string s) {
      const auto begin = s.find_first_not_of(" \t\r");
      if (begin == std::string::npos) return std::string();
      const auto end = s.find_last_not_of(" \t\r");
      return s.substr(begin, end - begin + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto equals = line.find('=');
    if (equals == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                  ": expected key=value");
    const std::string key = trim(line.substr(0, equals));
    const std::string value = trim(line.substr(equals + 1));
    const auto setter = setters.find(key);
    if (setter == setters.end())
      throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                  ": unknown key '" + key + "'");
    if (!overridden(key)) setter->second(value);
  }
}

int cmd_setup(const std::string& out, uint32_t n, uint32_t k, uint32_t m, uint32_t tau,
              double zeta, uint64_t seed, const std::string& weights_from) {
  sba::SystemParams params;
  params.n = n;
  params.k = k;
  params.m = m;
  params.tau = tau;
  params.zeta = zeta;
  params.validate();

  sba::SubsetPlan plan;
  if (!weights_from.empty() && zeta > 0.0) {
    const auto samples = sba::load_dataset(weights_from, sba::PopulationMode::bit_level, n);
    const auto mi = sba::estimate_mutual_information(samples);
    plan = sba::sample_subsets(params, sba::zeta_weights(mi, zeta), seed);
  } else {
    plan = sba::uniform_plan(params, seed);
  }
  sba::save_plan(plan, out);
  std::cout << "plan written: " << out << " (n=" << n << " k=" << k << " m=" << m
            << " zeta=" << zeta << ")\n";
  return kExitOk;
}

int cmd_genpop(const std::string& out, uint32_t count, const std::string& mode,
               double p_same, double sigma_t, uint32_t length, uint32_t dim,
               uint64_t seed) {
  sba::PopulationConfig cfg;
  cfg.count = count;
  cfg.seed = seed;
  if (mode == "bit") {
    cfg.mode = sba::PopulationMode::bit_level;
    cfg.noise = p_same;
    cfg.dimension_or_length = length;
  } else {
    cfg.mode = sba::PopulationMode::template_level;
    cfg.noise = sigma_t;
    cfg.dimension_or_length = dim;
  }
  const auto samples = sba::generate_population(cfg);
  sba::save_dataset(samples, out);
  std::cout << "population written: " << out << " (" << count << " identities, "
            << samples.size() << " samples)\n";
  return kExitOk;
}

int cmd_enroll(const std::string& store_path, const std::string& plan_path,
               const std::string& pop_path, uint32_t capacity, uint32_t limit,
               uint64_t bank_seed, const CryptoFlags& crypto) {
  const auto plan = sba::load_plan(plan_path);
  const auto key = crypto.key();
  const auto cfg = crypto.digest_config(key);
  auto store = open_or_create_store(store_path, capacity);

  const auto samples = sba::load_dataset(pop_path);
  auto entries = session_bits(samples, sba::Session::enroll, plan.params.n, bank_seed);
  if (limit > 0 && entries.size() > limit) entries.resize(limit);
  for (const auto& [id, bits] : entries) sba::enroll(store, id, bits, plan, cfg);
  sba::save_store(store, store_path);
  std::cout << "enrolled " << entries.size() << " identities into " << store_path
            << " (" << store.shard_count() << " shards, " << store.record_count()
            << " records)\n";
  return kExitOk;
}

int cmd_auth(const std::string& store_path, const std::string& plan_path,
             const std::string& bits_hex, const std::string& pop_path, int64_t id,
             uint32_t tau, uint64_t bank_seed, const CryptoFlags& crypto) {
  const auto plan = sba::load_plan(plan_path);
  const auto key = crypto.key();
  const auto cfg = crypto.digest_config(key);
  const auto store = sba::load_store(store_path);

  std::optional<sba::BitString> probe;
  if (!bits_hex.empty()) {
    probe = sba::BitString::from_bytes(sba::from_hex(bits_hex), plan.params.n);
  } else {
    const auto samples = sba::load_dataset(pop_path);
    for (const auto& [sample_id, bits] :
         session_bits(samples, sba::Session::auth, plan.params.n, bank_seed)) {
      if (static_cast<int64_t>(sample_id) == id) {
        probe = bits;
        break;
      }
    }
    if (!probe) throw std::invalid_argument("no auth sample for the requested id");
  }

  const auto result = sba::authenticate(store, *probe, plan, cfg, tau);
  if (result.matched()) {
    std::cout << "MATCH id=" << *result.matched_id << " count=" << result.match_count
              << "\n";
    return kExitOk;
  }
  std::cout << "REJECT\n";
  return kExitRejected;
}

int cmd_revoke(const std::string& store_path, uint32_t id) {
  auto store = sba::load_store(store_path);
  store.revoke(id);
  sba::save_store(store, store_path);
  std::cout << "revoked id=" << id << "\n";
  return kExitOk;
}

int cmd_entropy(const std::string& plan_path, const std::string& pop_path,
                const std::string& out, uint64_t pair_budget, uint64_t seed) {
  const auto plan = sba::load_plan(plan_path);
  const auto samples = sba::load_dataset(pop_path, sba::PopulationMode::bit_level);
  const auto report = sba::entropy_report(plan, samples, pair_budget, seed);
  sba::write_entropy_csv(report, out);
  std::cout << "entropy report written: " << out << " (k=" << report.k
            << " min=" << report.min_bits << " mean=" << report.mean_bits
            << " max=" << report.max_bits << ")\n";
  return kExitOk;
}

int cmd_bench(const sba::ExperimentConfig& cfg, const std::vector<std::string>& experiments,
              const std::string& out) {
  std::vector<sba::BenchRow> rows;
  for (const auto& experiment : experiments) {
    std::vector<sba::BenchRow> batch;
    if (experiment == "error") {
      batch = sba::run_error_experiment(cfg);
    } else if (experiment == "timing") {
      batch = sba::run_timing_experiment(cfg);
      for (const auto& row : batch)
        std::cout << "timing N=" << row.N << " enroll_ms=" << row.enroll_ms
                  << " auth_ms=" << row.auth_ms
                  << " lookups_per_auth=" << row.lookups_per_auth << "\n";
    } else if (experiment == "baseline") {
      batch = sba::run_insecure_baseline(cfg);
    } else {
      throw std::invalid_argument("unknown experiment: " + experiment);
    }
    rows.insert(rows.end(), batch.begin(), batch.end());
  }
  sba::emit_results(rows, out);
  std::cout << "results written: " << out << " (" << rows.size() << " rows)\n";
  return kExitOk;
}

int cmd_serve(const std::string& store_path, const std::string& plan_path,
              const std::string& bind, const std::string& payload, uint32_t tau,
              uint32_t capacity, const CryptoFlags& crypto) {
  const auto plan = sba::load_plan(plan_path);
  const auto key = crypto.key();
  const auto cfg = crypto.digest_config(key);
  auto store = open_or_create_store(store_path, capacity);

  sba::ServiceConfig service_cfg;
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("bind must be host:port");
  service_cfg.host = bind.substr(0, colon);
  service_cfg.port = static_cast<uint16_t>(std::stoul(bind.substr(colon + 1)));
  service_cfg.policy = sba::payload_policy_from_string(payload);
  service_cfg.tau = tau;

  sba::Service service(store, plan, cfg, service_cfg);
  service.start();
  std::cout << "listening on " << service_cfg.host << ":" << service.port()
            << " (payload=" << payload << ", tau=" << tau << ")" << std::endl;

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_interrupted.load())
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  sba::save_store(store, store_path);
  std::cout << "store saved: " << store_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-to-many biometric authentication over hashed LSH substrings"};
  app.require_subcommand(1);

  // setup
  auto* setup = app.add_subcommand("setup", "generate the public subset plan");
  uint32_t n = 4096, k = 110, m = 1000, tau = 1;
  double zeta = 1.0;
  uint64_t seed = 1;
  std::string out, weights_from;
  setup->add_option("--n", n, "LSH output length");
  setup->add_option("--k", k, "substring length");
  setup->add_option("--m", m, "number of subsets");
  setup->add_option("--tau", tau, "match threshold");
  setup->add_option("--zeta", zeta, "weighting exponent");
  setup->add_option("--seed", seed, "sampling seed");
  setup->add_option("--weights-from", weights_from,
                    "bit-level dataset for mutual-information weights");
  setup->add_option("--out", out, "plan file to write")->required();

  // genpop
  auto* genpop = app.add_subcommand("genpop", "generate a synthetic population");
  uint32_t count = 1000, length = 4096, dim = 1024;
  double p_same = 0.05, sigma_t = 0.02;
  std::string mode = "bit";
  uint64_t pop_seed = 1;
  std::string pop_out;
  genpop->add_option("--count", count, "number of identities");
  genpop->add_option("--mode", mode, "bit or template")
      ->check(CLI::IsMember({"bit", "template"}));
  genpop->add_option("--p-same", p_same, "per-bit flip probability (bit mode)");
  genpop->add_option("--sigma-t", sigma_t, "noise scale (template mode)");
  genpop->add_option("--length", length, "bit-string length (bit mode)");
  genpop->add_option("--dim", dim, "template dimension (template mode)");
  genpop->add_option("--seed", pop_seed, "generation seed");
  genpop->add_option("--out", pop_out, "dataset file to write")->required();

  // enroll
  auto* enroll_cmd = app.add_subcommand("enroll", "enroll a population into a store");
  std::string store_path, plan_path, pop_path;
  uint32_t capacity = sba::ShardedStore::kDefaultShardCapacity;
  uint32_t limit = 0;
  uint64_t bank_seed = 0;
  CryptoFlags enroll_crypto;
  enroll_cmd->add_option("--store", store_path, "store file")->required();
  enroll_cmd->add_option("--plan", plan_path, "plan file")->required();
  enroll_cmd->add_option("--pop", pop_path, "dataset file")->required();
  enroll_cmd->add_option("--capacity", capacity, "shard capacity for a new store");
  enroll_cmd->add_option("--limit", limit, "enroll at most this many identities");
  enroll_cmd->add_option("--bank-seed", bank_seed, "hyperplane bank seed (template data)");
  enroll_crypto.attach(*enroll_cmd);

  // auth
  auto* auth_cmd = app.add_subcommand("auth", "authenticate one probe");
  std::string auth_store, auth_plan, bits_hex, auth_pop;
  int64_t auth_id = -1;
  uint32_t auth_tau = 1;
  uint64_t auth_bank_seed = 0;
  CryptoFlags auth_crypto;
  auth_cmd->add_option("--store", auth_store, "store file")->required();
  auth_cmd->add_option("--plan", auth_plan, "plan file")->required();
  auth_cmd->add_option("--bits-hex", bits_hex, "probe bit string, packed hex");
  auth_cmd->add_option("--pop", auth_pop, "dataset holding the probe");
  auth_cmd->add_option("--id", auth_id, "identity whose auth sample to probe");
  auth_cmd->add_option("--tau", auth_tau, "match threshold");
  auth_cmd->add_option("--bank-seed", auth_bank_seed, "hyperplane bank seed");
  auth_crypto.attach(*auth_cmd);

  // revoke
  auto* revoke_cmd = app.add_subcommand("revoke", "remove an enrolled identity");
  std::string revoke_store;
  uint32_t revoke_id = 0;
  revoke_cmd->add_option("--store", revoke_store, "store file")->required();
  revoke_cmd->add_option("--id", revoke_id, "identity to revoke")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run the evaluation harness");
  std::string bench_config_path;
  bench_cmd->add_option("--config", bench_config_path,
                        "key=value experiment config file; flags override it");
  sba::ExperimentConfig bench_cfg;
  std::vector<std::string> experiments = {"error"};
  std::string bench_out = "results.csv";
  std::string bench_hash_mode = "plain_hash";
  bench_cmd->add_option("--sizes", bench_cfg.sizes, "population sizes to enroll");
  bench_cmd->add_option("--fn-probes", bench_cfg.fn_probe_count, "false-negative probes");
  bench_cmd->add_option("--fp-probes", bench_cfg.fp_probe_count, "false-positive probes");
  bench_cmd->add_option("--trials", bench_cfg.trials, "trials per configuration");
  bench_cmd->add_option("--k-grid", bench_cfg.k_grid, "substring lengths");
  bench_cmd->add_option("--tau-grid", bench_cfg.tau_grid, "thresholds");
  bench_cmd->add_option("--zeta-grid", bench_cfg.zeta_grid, "weighting exponents");
  bench_cmd->add_option("--p-same-grid", bench_cfg.p_same_grid, "bit-flip probabilities");
  bench_cmd->add_option("--n", bench_cfg.n, "LSH output length");
  bench_cmd->add_option("--m", bench_cfg.m, "number of subsets");
  bench_cmd->add_option("--capacity", bench_cfg.shard_capacity, "shard capacity");
  bench_cmd->add_option("--hash-mode", bench_hash_mode, "plain_hash or keyed_prf")
      ->check(CLI::IsMember({"plain_hash", "keyed_prf", "plain", "prf"}));
  bench_cmd->add_flag("--domain-separation,!--no-domain-separation",
                      bench_cfg.domain_separation, "subset-index domain separation");
  bench_cmd->add_option("--prf-key-hex", bench_cfg.prf_key_hex, "keyed_prf key");
  bench_cmd->add_option("--template-dim", bench_cfg.template_dim, "baseline dimension");
  bench_cmd->add_option("--sigma-t", bench_cfg.sigma_t, "baseline template noise");
  bench_cmd->add_option("--baseline-threshold", bench_cfg.baseline_threshold,
                        "baseline accept distance");
  bench_cmd->add_option("--seed", bench_cfg.seed, "experiment seed");
  bench_cmd->add_option("--experiments", experiments, "subset of error,timing,baseline");
  bench_cmd->add_option("--out", bench_out, "results CSV path");

  // entropy
  auto* entropy_cmd = app.add_subcommand("entropy", "estimate substring min-entropy");
  std::string entropy_plan, entropy_pop, entropy_out = "entropy.csv";
  uint64_t pair_budget = 1000000, entropy_seed = 0;
  entropy_cmd->add_option("--plan", entropy_plan, "plan file")->required();
  entropy_cmd->add_option("--pop", entropy_pop, "bit-level dataset")->required();
  entropy_cmd->add_option("--out", entropy_out, "report CSV path");
  entropy_cmd->add_option("--pair-budget", pair_budget, "max cross-identity pairs");
  entropy_cmd->add_option("--seed", entropy_seed, "pair subsampling seed");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the wire-protocol service");
  std::string serve_store, serve_plan, bind = "127.0.0.1:7700", payload = "digests";
  uint32_t serve_tau = 1;
  uint32_t serve_capacity = sba::ShardedStore::kDefaultShardCapacity;
  CryptoFlags serve_crypto;
  serve_cmd->add_option("--store", serve_store, "store file")->required();
  serve_cmd->add_option("--plan", serve_plan, "plan file")->required();
  serve_cmd->add_option("--bind", bind, "host:port to listen on");
  serve_cmd->add_option("--payload", payload, "digests, bits or both")
      ->check(CLI::IsMember({"digests", "bits", "both"}));
  serve_cmd->add_option("--tau", serve_tau, "match threshold");
  serve_cmd->add_option("--capacity", serve_capacity, "shard capacity for a new store");
  serve_crypto.attach(*serve_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (setup->parsed())
      return cmd_setup(out, n, k, m, tau, zeta, seed, weights_from);
    if (genpop->parsed())
      return cmd_genpop(pop_out, count, mode, p_same, sigma_t, length, dim, pop_seed);
    if (enroll_cmd->parsed())
      return cmd_enroll(store_path, plan_path, pop_path, capacity, limit, bank_seed,
                        enroll_crypto);
    if (auth_cmd->parsed()) {
      if (bits_hex.empty() && auth_pop.empty())
        throw std::invalid_argument("auth needs --bits-hex or --pop with --id");
      return cmd_auth(auth_store, auth_plan, bits_hex, auth_pop, auth_id, auth_tau,
                      auth_bank_seed, auth_crypto);
    }
    if (revoke_cmd->parsed()) return cmd_revoke(revoke_store, revoke_id);
    if (bench_cmd->parsed()) {
      if (!bench_config_path.empty()) {
        apply_bench_config(bench_config_path, bench_cfg, bench_hash_mode, experiments,
                           bench_out, [&](const std::string& key) {
                             return bench_cmd->count("--" + key) > 0;
                           });
      }
      bench_cfg.hash_mode = sba::hash_mode_from_string(bench_hash_mode);
      return cmd_bench(bench_cfg, experiments, bench_out);
    }
    if (entropy_cmd->parsed())
      return cmd_entropy(entropy_plan, entropy_pop, entropy_out, pair_budget,
                         entropy_seed);
    if (serve_cmd->parsed())
      return cmd_serve(serve_store, serve_plan, bind, payload, serve_tau, serve_capacity,
                       serve_crypto);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
