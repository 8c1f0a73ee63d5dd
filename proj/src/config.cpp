#include "urlab/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "urlab/errors.hpp"
#include "urlab/rng.hpp"

namespace urlab::harness {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

std::int64_t parse_int(const std::string& v, const std::string& key) {
    const double d = parse_double(v, key);
    const auto i = static_cast<std::int64_t>(d);
    if (static_cast<double>(i) != d) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return i;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string num_str(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "env") env = value;
    else if (key == "episode_len") episode_len = static_cast<int>(parse_int(value, key));
    else if (key == "dt") dt = parse_double(value, key);
    else if (key == "force_gain") force_gain = parse_double(value, key);
    else if (key == "damping") damping = parse_double(value, key);
    else if (key == "max_speed") max_speed = parse_double(value, key);
    else if (key == "reward_sigma") reward_sigma = parse_double(value, key);
    else if (key == "algorithm") algorithm = value;
    else if (key == "polter") polter = parse_bool(value, key);
    else if (key == "alpha") alpha = parse_double(value, key);
    else if (key == "kl_mode") kl_mode = value;
    else if (key == "policy_std") policy_std = parse_double(value, key);
    else if (key == "polter_star_reference") polter_star_reference = value;
    else if (key == "schedule") schedule = value;
    else if (key == "hidden") hidden = value;
    else if (key == "lr") lr = parse_double(value, key);
    else if (key == "gamma") gamma = parse_double(value, key);
    else if (key == "n_step") n_step = static_cast<int>(parse_int(value, key));
    else if (key == "tau") tau = parse_double(value, key);
    else if (key == "noise_std") noise_std = parse_double(value, key);
    else if (key == "noise_std_final") noise_std_final = parse_double(value, key);
    else if (key == "noise_clip") noise_clip = parse_double(value, key);
    else if (key == "update_every") update_every = static_cast<int>(parse_int(value, key));
    else if (key == "seed_frames") seed_frames = static_cast<int>(parse_int(value, key));
    else if (key == "batch_size") batch_size = static_cast<int>(parse_int(value, key));
    else if (key == "buffer_capacity") buffer_capacity = parse_int(value, key);
    else if (key == "rnd_embed_dim") rnd_embed_dim = static_cast<int>(parse_int(value, key));
    else if (key == "icm_embed_dim") icm_embed_dim = static_cast<int>(parse_int(value, key));
    else if (key == "disagreement_ensemble") disagreement_ensemble = static_cast<int>(parse_int(value, key));
    else if (key == "apt_k") apt_k = static_cast<int>(parse_int(value, key));
    else if (key == "apt_eps") apt_eps = parse_double(value, key);
    else if (key == "n_pretrain") n_pretrain = parse_int(value, key);
    else if (key == "n_finetune") n_finetune = parse_int(value, key);
    else if (key == "oracle_steps") oracle_steps = parse_int(value, key);
    else if (key == "checkpoint_interval") checkpoint_interval = parse_int(value, key);
    else if (key == "eval_interval") eval_interval = parse_int(value, key);
    else if (key == "eval_episodes") eval_episodes = static_cast<int>(parse_int(value, key));
    else if (key == "finetune_seed_frames") finetune_seed_frames = static_cast<int>(parse_int(value, key));
    else if (key == "finetune_critic_warmup") finetune_critic_warmup = parse_int(value, key);
    else if (key == "dump_states") dump_states = parse_bool(value, key);
    else if (key == "entropy_window") entropy_window = parse_int(value, key);
    else if (key == "bins_per_dim") bins_per_dim = static_cast<int>(parse_int(value, key));
    else if (key == "probe_states") probe_states = static_cast<int>(parse_int(value, key));
    else if (key == "probe_seed") probe_seed = parse_int(value, key);
    else if (key == "carry_critic") carry_critic = parse_bool(value, key);
    else if (key == "carry_optimizer") carry_optimizer = parse_bool(value, key);
    else if (key == "target") target = value;
    else if (key == "target_range") target_range = parse_double(value, key);
    else throw ConfigError("unknown config key: '" + key + "'");
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream out;
    out << "env = " << env << "\n";
    out << "episode_len = " << episode_len << "\n";
    out << "dt = " << num_str(dt) << "\n";
    out << "force_gain = " << num_str(force_gain) << "\n";
    out << "damping = " << num_str(damping) << "\n";
    out << "max_speed = " << num_str(max_speed) << "\n";
    out << "reward_sigma = " << num_str(reward_sigma) << "\n";
    out << "algorithm = " << algorithm << "\n";
    out << "polter = " << bool_str(polter) << "\n";
    out << "alpha = " << num_str(alpha) << "\n";
    out << "kl_mode = " << kl_mode << "\n";
    out << "policy_std = " << num_str(policy_std) << "\n";
    out << "polter_star_reference = " << polter_star_reference << "\n";
    out << "schedule = " << schedule << "\n";
    out << "hidden = " << hidden << "\n";
    out << "lr = " << num_str(lr) << "\n";
    out << "gamma = " << num_str(gamma) << "\n";
    out << "n_step = " << n_step << "\n";
    out << "tau = " << num_str(tau) << "\n";
    out << "noise_std = " << num_str(noise_std) << "\n";
    out << "noise_std_final = " << num_str(noise_std_final) << "\n";
    out << "noise_clip = " << num_str(noise_clip) << "\n";
    out << "update_every = " << update_every << "\n";
    out << "seed_frames = " << seed_frames << "\n";
    out << "batch_size = " << batch_size << "\n";
    out << "buffer_capacity = " << buffer_capacity << "\n";
    out << "rnd_embed_dim = " << rnd_embed_dim << "\n";
    out << "icm_embed_dim = " << icm_embed_dim << "\n";
    out << "disagreement_ensemble = " << disagreement_ensemble << "\n";
    out << "apt_k = " << apt_k << "\n";
    out << "apt_eps = " << num_str(apt_eps) << "\n";
    out << "n_pretrain = " << n_pretrain << "\n";
    out << "n_finetune = " << n_finetune << "\n";
    out << "oracle_steps = " << oracle_steps << "\n";
    out << "checkpoint_interval = " << checkpoint_interval << "\n";
    out << "eval_interval = " << eval_interval << "\n";
    out << "eval_episodes = " << eval_episodes << "\n";
    out << "finetune_seed_frames = " << finetune_seed_frames << "\n";
    out << "finetune_critic_warmup = " << finetune_critic_warmup << "\n";
    out << "dump_states = " << bool_str(dump_states) << "\n";
    out << "entropy_window = " << entropy_window << "\n";
    out << "bins_per_dim = " << bins_per_dim << "\n";
    out << "probe_states = " << probe_states << "\n";
    out << "probe_seed = " << probe_seed << "\n";
    out << "carry_critic = " << bool_str(carry_critic) << "\n";
    out << "carry_optimizer = " << bool_str(carry_optimizer) << "\n";
    out << "target = " << target << "\n";
    out << "target_range = " << num_str(target_range) << "\n";
    return out.str();
}

namespace {

void parse_into(ExperimentConfig& cfg, const std::string& text, const std::filesystem::path& base_dir, int depth) {
    if (depth > 16) throw ConfigError("config: include depth exceeded (cycle?)");
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.rfind("include ", 0) == 0) {
            const std::filesystem::path inc = base_dir / trim(line.substr(8));
            std::ifstream f(inc);
            if (!f) throw ConfigError("config: cannot open include '" + inc.string() + "'");
            std::stringstream buf;
            buf << f.rdbuf();
            parse_into(cfg, buf.str(), inc.parent_path(), depth + 1);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value, got '" + line + "'");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    parse_into(cfg, text, base_dir, 0);
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str(), path.parent_path());
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config: cannot write '" + path.string() + "'");
    f << serialize();
}

std::vector<int> ExperimentConfig::hidden_sizes() const {
    std::vector<int> sizes;
    std::stringstream ss(hidden);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        sizes.push_back(static_cast<int>(parse_int(item, "hidden")));
    }
    if (sizes.empty()) throw ConfigError("hidden: no layer sizes given");
    for (int s : sizes)
        if (s <= 0) throw ConfigError("hidden: layer sizes must be positive");
    return sizes;
}

ddpg::DdpgConfig ExperimentConfig::ddpg_config() const {
    ddpg::DdpgConfig c;
    c.hidden = hidden_sizes();
    c.lr = static_cast<float>(lr);
    c.gamma = static_cast<float>(gamma);
    c.n_step = n_step;
    c.tau = static_cast<float>(tau);
    c.noise_std = static_cast<float>(noise_std);
    c.noise_clip = static_cast<float>(noise_clip);
    c.update_every = update_every;
    c.seed_frames = seed_frames;
    c.batch_size = batch_size;
    return c;
}

intrinsic::IntrinsicConfig ExperimentConfig::intrinsic_config() const {
    intrinsic::IntrinsicConfig c;
    c.variant = intrinsic::variant_from_string(algorithm);
    c.hidden = hidden_sizes();
    c.rnd_embed_dim = rnd_embed_dim;
    c.icm_embed_dim = icm_embed_dim;
    c.ensemble_size = disagreement_ensemble;
    c.apt_k = apt_k;
    c.apt_eps = static_cast<float>(apt_eps);
    c.lr = static_cast<float>(lr);
    return c;
}

envs::PointMassConfig ExperimentConfig::pointmass_config() const {
    envs::PointMassConfig c;
    c.dt = dt;
    c.force_gain = force_gain;
    c.damping = damping;
    c.max_speed = max_speed;
    c.episode_len = episode_len;
    return c;
}

polter::PolterConfig ExperimentConfig::polter_config() const {
    polter::PolterConfig c;
    c.alpha = alpha;
    c.sigma = policy_std;
    if (kl_mode == "upper_bound") c.mode = polter::KlMode::UpperBound;
    else if (kl_mode == "mean_action") c.mode = polter::KlMode::MeanAction;
    else throw ConfigError("kl_mode: expected upper_bound or mean_action, got '" + kl_mode + "'");
    return c;
}

polter::SnapshotSchedule ExperimentConfig::snapshot_schedule() const {
    if (schedule == "auto") return polter::SnapshotSchedule::scaled(n_pretrain);
    polter::SnapshotSchedule s;
    std::stringstream ss(schedule);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        s.entries.push_back(parse_int(item, "schedule"));
    }
    s.validate();
    return s;
}

std::array<double, 2> ExperimentConfig::resolve_target(std::uint64_t seed) const {
    if (target == "auto") {
        Rng rng = make_rng(seed, 0x7a9e7);
        std::uniform_real_distribution<double> u(-target_range, target_range);
        const double x = u(rng);
        const double y = u(rng);
        return {x, y};
    }
    const auto comma = target.find(',');
    if (comma == std::string::npos) throw ConfigError("target: expected 'auto' or 'x,y', got '" + target + "'");
    return {parse_double(trim(target.substr(0, comma)), "target"),
            parse_double(trim(target.substr(comma + 1)), "target")};
}

void ExperimentConfig::validate() const {
    if (env != "pointmass") throw ConfigError("env: only 'pointmass' is available, got '" + env + "'");
    intrinsic::variant_from_string(algorithm);
    if (alpha < 0.0) throw ConfigError("alpha: must be >= 0");
    if (policy_std <= 0.0) throw ConfigError("policy_std: must be > 0");
    if (episode_len <= 0) throw ConfigError("episode_len: must be positive");
    if (n_pretrain <= 0 || n_finetune <= 0) throw ConfigError("run lengths must be positive");
    if (batch_size <= 0) throw ConfigError("batch_size: must be positive");
    if (n_step < 1) throw ConfigError("n_step: must be >= 1");
    if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("gamma: must be in (0,1)");
    if (checkpoint_interval <= 0 || eval_interval <= 0) throw ConfigError("intervals must be positive");
    if (update_every <= 0) throw ConfigError("update_every: must be positive");
    if (probe_states <= 0) throw ConfigError("probe_states: must be positive");
    polter_config();     // validates kl_mode
    hidden_sizes();
    snapshot_schedule();
}

}  // namespace urlab::harness
