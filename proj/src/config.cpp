#include "nslab/config.hpp"

#include "nslab/errors.hpp"

#include <fstream>
#include <sstream>

namespace nslab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t to_count(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long n = std::stoll(v, &pos);
        if (pos != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
}

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    }
}

} // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string section = "experiment";
    int lineno = 0;
    for (std::string raw; std::getline(is, raw);) {
        ++lineno;
        auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        kv[section + "." + trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    for (const auto& [k, v] : parse_key_values(text)) {
        if (k == "experiment.dataset") c.dataset = v;
        else if (k == "experiment.seed") c.seed = to_count(k, v);
        else if (k == "experiment.out") c.out = v;
        else if (k == "experiment.jobs") c.jobs = to_count(k, v);
        else if (k == "data.train_count") c.train_count = to_count(k, v);
        else if (k == "data.val_count") c.val_count = to_count(k, v);
        else if (k == "data.video_count") c.video_count = to_count(k, v);
        else if (k == "data.step") c.step = to_real(k, v);
        else if (k == "data.channel_step") c.channel_step = to_real(k, v);
        else if (k == "data.resolution") c.resolution = to_count(k, v);
        else if (k == "data.mnist_images") c.mnist_images = v;
        else if (k == "data.mnist_labels") c.mnist_labels = v;
        else if (k == "data.digit") c.digit = static_cast<int>(to_count(k, v));
        else if (k == "data.templates") c.templates = to_count(k, v);
        else if (k == "data.angles_per_template") c.angles_per_template = to_count(k, v);
        else if (k == "data.val_angles_per_template") c.val_angles_per_template = to_count(k, v);
        else if (k == "train.realizations") c.realizations = to_count(k, v);
        else if (k == "train.epochs") c.epochs = to_count(k, v);
        else if (k == "train.batch_size") c.batch_size = to_count(k, v);
        else if (k == "train.lr") c.lr = to_real(k, v);
        else if (k == "train.setups") {
            c.setups.clear();
            std::istringstream ss(v);
            for (std::string tok; std::getline(ss, tok, ',');) c.setups.push_back(parse_setup(trim(tok)));
        } else if (k == "analysis.tau_d") c.tau_d = to_real(k, v);
        else if (k == "analysis.a") c.split_a = to_real(k, v);
        else if (k == "analysis.eps_zero_rel") c.eps_zero_rel = to_real(k, v);
        else if (k == "analysis.mc_trials") c.mc_trials = to_count(k, v);
        else if (k == "analysis.hist_bins") c.hist_bins = to_count(k, v);
        else throw ConfigError("config: unknown key '" + k + "'");
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

void ExperimentConfig::apply_paper_scale() {
    train_count = 10000;
    val_count = 1000;
    video_count = 100;
    realizations = 10;
    angles_per_template = 60;
    val_angles_per_template = 60;
}

void ExperimentConfig::validate() const {
    if (dataset != "ellipsoid" && dataset != "mnist-rotation")
        throw ConfigError("config: dataset must be 'ellipsoid' or 'mnist-rotation'");
    for (auto [name, v] : {std::pair{"train_count", train_count}, {"val_count", val_count}, {"video_count", video_count},
                           {"realizations", realizations}, {"epochs", epochs}, {"batch_size", batch_size},
                           {"jobs", jobs}, {"mc_trials", mc_trials}, {"templates", templates},
                           {"angles_per_template", angles_per_template}, {"val_angles_per_template", val_angles_per_template},
                           {"hist_bins", hist_bins}})
        if (v < 1) throw ConfigError(std::string("config: ") + name + " must be >= 1");
    if (resolution == 0 || resolution % 4 != 0) throw ConfigError("config: resolution must be a positive multiple of 4");
    if (!(step > 0) || !(channel_step > 0) || !(lr > 0) || !(tau_d > 0) || !(split_a > 0) || !(eps_zero_rel >= 0))
        throw ConfigError("config: step, channel_step, lr, tau_d and a must be positive");
    if (setups.empty()) throw ConfigError("config: no setups");
    if (mnist_labels && !mnist_images) throw ConfigError("config: mnist_labels given without mnist_images");
}

std::string ExperimentConfig::canonical() const {
    // Parseable by parse_config; the output directory and job count are left
    // out since they do not change results.
    std::ostringstream os;
    os.precision(17);
    os << "dataset=" << dataset << "\nseed=" << seed << "\n";
    os << "[data]\ntrain_count=" << train_count << "\nval_count=" << val_count << "\nvideo_count=" << video_count
       << "\nstep=" << step << "\nchannel_step=" << channel_step << "\nresolution=" << resolution << "\n";
    if (mnist_images) os << "mnist_images=" << mnist_images->string() << "\n";
    if (mnist_labels) os << "mnist_labels=" << mnist_labels->string() << "\n";
    os << "digit=" << digit << "\ntemplates=" << templates << "\nangles_per_template=" << angles_per_template
       << "\nval_angles_per_template=" << val_angles_per_template << "\n";
    os << "[train]\nrealizations=" << realizations << "\nepochs=" << epochs << "\nbatch_size=" << batch_size
       << "\nlr=" << lr << "\nsetups=";
    for (std::size_t i = 0; i < setups.size(); ++i) os << (i ? "," : "") << to_string(setups[i]);
    os << "\n[analysis]\ntau_d=" << tau_d << "\na=" << split_a << "\neps_zero_rel=" << eps_zero_rel
       << "\nmc_trials=" << mc_trials << "\nhist_bins=" << hist_bins << "\n";
    return os.str();
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace nslab
