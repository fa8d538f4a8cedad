#include "nslab/experiment.hpp"

#include "nslab/errors.hpp"
#include "nslab/nonsmooth.hpp"
#include "nslab/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace nslab {

namespace fs = std::filesystem;

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < count;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

namespace {

// Seed streams: 0 train images, 1 val images, 2 videos, 3 templates, 4 noise,
// 5 training, 6 Monte Carlo.
enum Stream : std::uint64_t { kTrainData, kValData, kVideo, kTemplate, kNoise, kTraining, kMonteCarlo };

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

class Csv {
public:
    Csv(const fs::path& path, const std::vector<std::string>& header) : os_(path), path_(path) {
        if (!os_) throw MissingInputError("cannot write " + path.string());
        row_strings(header);
    }
    template <class... Ts>
    void row(const Ts&... vs) {
        std::vector<std::string> cells{cell(vs)...};
        row_strings(cells);
    }

private:
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(double v) { return fmt(v); }
    template <class I>
        requires std::is_integral_v<I>
    static std::string cell(I v) {
        return std::to_string(v);
    }
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << "\n";
    }
    std::ofstream os_;
    fs::path path_;
};

fs::path data_dir(const ExperimentConfig& cfg) { return cfg.out / "data"; }
fs::path reports_dir(const ExperimentConfig& cfg) { return cfg.out / "reports"; }

fs::path video_dir(const ExperimentConfig& cfg, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "video_%03zu", i);
    return data_dir(cfg) / "videos" / buf;
}

void require(const fs::path& p) {
    if (!fs::exists(p)) throw MissingInputError("missing input: " + p.string());
}

Dataset load_dataset(const ExperimentConfig& cfg, bool images, bool videos) {
    Dataset d;
    if (images) {
        require(data_dir(cfg) / "train.nsis");
        require(data_dir(cfg) / "val.nsis");
        d.train = load_image_set(data_dir(cfg) / "train.nsis");
        d.val = load_image_set(data_dir(cfg) / "val.nsis");
    }
    if (videos) {
        for (std::size_t i = 0; i < cfg.video_count; ++i) {
            require(video_dir(cfg, i) / "manifest.txt");
            d.videos.push_back(load_video(video_dir(cfg, i)));
        }
        require(data_dir(cfg) / "videos" / "default" / "manifest.txt");
        d.default_video = load_video(data_dir(cfg) / "videos" / "default");
    }
    return d;
}

EllipsoidSpec ellipsoid_spec(const ExperimentConfig& cfg) {
    EllipsoidSpec s;
    s.resolution = cfg.resolution;
    return s;
}

} // namespace

ImageSet dataset_templates(const ExperimentConfig& cfg) {
    if (cfg.mnist_images) {
        ImageSet t = load_idx_images(*cfg.mnist_images, cfg.mnist_labels,
                                     cfg.mnist_labels ? std::optional<int>(cfg.digit) : std::nullopt);
        if (t.empty()) throw ConfigError("IDX file holds no images for the requested digit");
        if (t.front().rows != cfg.resolution || t.front().cols != cfg.resolution)
            throw ConfigError("IDX image size does not match configured resolution");
        return t;
    }
    return procedural_sevens(cfg.templates, cfg.resolution, derive_seed(cfg.seed, {kTemplate}));
}

Dataset build_dataset(const ExperimentConfig& cfg) {
    Dataset d;
    if (cfg.dataset == "ellipsoid") {
        const auto spec = ellipsoid_spec(cfg);
        d.train = generate_ellipsoid_dataset(cfg.train_count, derive_seed(cfg.seed, {kTrainData}), spec);
        d.val = generate_ellipsoid_dataset(cfg.val_count, derive_seed(cfg.seed, {kValData}), spec);
        for (std::size_t i = 0; i < cfg.video_count; ++i)
            d.videos.push_back(generate_light_path_video(random_light_path(derive_seed(cfg.seed, {kVideo, i}), cfg.step), spec));
        LightPath def;
        def.step = cfg.channel_step;
        d.default_video = generate_light_path_video(def, spec);
    } else {
        const ImageSet templates = dataset_templates(cfg);
        d.train = generate_rotation_dataset(templates, cfg.angles_per_template, derive_seed(cfg.seed, {kTrainData}));
        d.val = generate_rotation_dataset(templates, cfg.val_angles_per_template, derive_seed(cfg.seed, {kValData}));
        for (std::size_t i = 0; i < cfg.video_count; ++i)
            d.videos.push_back(
                generate_noise_trajectory_video(templates[i % templates.size()], derive_seed(cfg.seed, {kNoise, i})));
        d.default_video = d.videos.front();
    }
    return d;
}

std::uint64_t realization_seed(std::uint64_t master, Setup setup, std::size_t realization) {
    return derive_seed(master, {kTraining, static_cast<std::uint64_t>(setup), realization});
}

fs::path checkpoint_path(const ExperimentConfig& cfg, Setup setup, std::size_t realization) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_r%02zu.nsmn", to_string(setup).c_str(), realization);
    return cfg.out / "checkpoints" / buf;
}

std::vector<Checkpoint> train_realizations(const ExperimentConfig& cfg, const ImageSet& train, const ImageSet& val) {
    const std::size_t R = cfg.realizations;
    std::vector<Checkpoint> out(cfg.setups.size() * R);
    parallel_for(out.size(), cfg.jobs, [&](std::size_t i) {
        TrainConfig tc;
        tc.epochs = cfg.epochs;
        tc.batch_size = cfg.batch_size;
        tc.lr = cfg.lr;
        tc.setup = cfg.setups[i / R];
        out[i] = train_autoencoder(train, val, tc, realization_seed(cfg.seed, tc.setup, i % R));
    });
    return out;
}

std::vector<AveNonSmoothRow> ave_nonsmooth_table(const std::vector<Checkpoint>& nets,
                                                 const std::vector<VideoSequence>& videos, std::size_t jobs) {
    std::vector<AveNonSmoothRow> rows(videos.size() * (nets.size() + 1));
    std::vector<std::size_t> realization_of(nets.size());
    {
        std::map<Setup, std::size_t> seen;
        for (std::size_t n = 0; n < nets.size(); ++n) realization_of[n] = seen[nets[n].net.setup]++;
    }
    parallel_for(rows.size(), jobs, [&](std::size_t i) {
        const std::size_t v = i % videos.size();
        const std::size_t n = i / videos.size();
        if (n == nets.size()) {
            rows[i] = {"original", -1, v, ave_nonsmooth(videos[v])};
        } else {
            rows[i] = {to_string(nets[n].net.setup), static_cast<long>(realization_of[n]), v,
                       ave_nonsmooth(reconstruct_video(nets[n].net, videos[v]))};
        }
    });
    return rows;
}

ChainLayers locate_chain(const Network& net) {
    ChainLayers c;
    std::vector<std::size_t> convs;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].spec.kind == LayerKind::conv) convs.push_back(i);
        if (net.layers[i].spec.kind == LayerKind::transpose_conv) c.tconvs.push_back(i);
    }
    if (convs.empty()) throw ShapeError("locate_chain: network has no conv layer");
    c.conv = convs.size() > 1 ? convs[1] : convs[0];
    if (c.conv + 2 >= net.layers.size() || net.layers[c.conv + 1].spec.kind != LayerKind::activation ||
        net.layers[c.conv + 2].spec.kind != LayerKind::pool)
        throw ShapeError("locate_chain: modelled conv is not followed by activation and pool");
    c.act = c.conv + 1;
    c.pool = c.conv + 2;
    return c;
}

ChainOptions chain_options(const ExperimentConfig& cfg) {
    ChainOptions o;
    o.split_a = cfg.split_a;
    o.eps_zero_rel = cfg.eps_zero_rel;
    o.mc_trials = cfg.mc_trials;
    o.seed = derive_seed(cfg.seed, {kMonteCarlo});
    return o;
}

ChainAnalysis analyze_chain(const Network& net, const VideoSequence& video, const ChainOptions& opts,
                            const ChannelParamsFile* fixed) {
    ChainAnalysis a;
    a.layers = locate_chain(net);
    const auto& L = a.layers;

    std::set<BoundaryId> wanted{L.conv, L.act, L.act + 1, L.pool + 1};
    for (auto t : L.tconvs) {
        wanted.insert(t);
        wanted.insert(t + 1);
    }
    auto traces = trace_forward(net, video, {wanted.begin(), wanted.end()});
    a.smp = layer_smp_map(traces);

    std::vector<std::pair<std::string, std::size_t>> conv_layers{{"conv2", L.conv}};
    for (std::size_t i = 0; i < L.tconvs.size(); ++i) conv_layers.emplace_back("tconv" + std::to_string(i + 1), L.tconvs[i]);
    for (const auto& [name, li] : conv_layers) {
        for (WeightMode mode : {WeightMode::actual, WeightMode::expected}) {
            ConvFit f;
            f.layer = name;
            f.layer_index = li;
            f.mode = mode;
            const SmpMap pred = channel_mean_smp(predict_conv_smp(a.smp.at(li), ConvChannelModel::from_layer(net.layers[li], mode)));
            const SmpMap real = channel_mean_smp(a.smp.at(li + 1));
            f.predicted = pred.values;
            f.real = real.values;
            f.rows = real.rows;
            f.cols = real.cols;
            try {
                f.fit = linreg_r2(f.predicted, f.real);
                f.ok = true;
            } catch (const std::exception& e) {
                f.error = e.what();
            }
            a.conv_fits.push_back(std::move(f));
        }
    }

    {
        const auto pairs = weight_input_pairs(net.layers[L.conv], a.smp.at(L.conv));
        std::vector<double> w, x;
        for (const auto& p : pairs) {
            w.push_back(p.x);
            x.push_back(p.y);
        }
        try {
            a.weight_pearson = pearson(w, x);
        } catch (const NumericError&) {
            a.weight_pearson = std::nan("");
        }
    }

    a.relu_pairs = elementwise_pairs(a.smp.at(L.act), a.smp.at(L.act + 1));
    a.pool_pairs = window_max_pairs(a.smp.at(L.pool), a.smp.at(L.pool + 1), net.layers[L.pool].spec.kernel,
                                    net.layers[L.pool].spec.stride);
    if (fixed) {
        a.params = *fixed;
    } else {
        const auto& relu_out = a.smp.at(L.act + 1).values;
        const double max_smp = relu_out.empty() ? 0.0 : *std::max_element(relu_out.begin(), relu_out.end());
        a.params.w0 = estimate_w0(net.layers[L.conv].weight);
        // Per-node regression of observed conv output SMPs on the raw model.
        const SmpMap raw = predict_conv_smp(a.smp.at(L.conv), ConvChannelModel::from_layer(net.layers[L.conv], opts.mc_mode));
        const RegressionResult cal = linreg_r2(raw.values, a.smp.at(L.conv + 1).values);
        a.params.conv = {cal.slope, cal.intercept};
        a.params.relu = fit_relu_channel(a.relu_pairs, opts.eps_zero_rel * max_smp);
        a.params.pool = fit_maxpool_channel(a.pool_pairs, opts.split_a);
    }

    PipelineStages stages;
    stages.conv = ConvChannelModel::from_layer(net.layers[L.conv], opts.mc_mode);
    if (opts.mc_mode == WeightMode::expected) stages.conv.w0 = a.params.w0;
    stages.calibration = a.params.conv;
    stages.relu = a.params.relu;
    stages.pool_kernel = net.layers[L.pool].spec.kernel;
    stages.pool_stride = net.layers[L.pool].spec.stride;
    stages.pool = a.params.pool;
    a.mc_samples = monte_carlo_pipeline(a.smp.at(L.conv), stages, opts.mc_trials, opts.seed);
    a.real_output = a.smp.at(L.pool + 1).values;
    a.w1 = wasserstein1(a.mc_samples, a.real_output);
    a.real_mean = std::accumulate(a.real_output.begin(), a.real_output.end(), 0.0) /
                  static_cast<double>(a.real_output.size());
    return a;
}

// ---- commands ----

int cmd_gen_data(const ExperimentConfig& cfg) {
    const Dataset d = build_dataset(cfg);
    fs::create_directories(data_dir(cfg) / "videos");
    save_image_set(data_dir(cfg) / "train.nsis", d.train);
    save_image_set(data_dir(cfg) / "val.nsis", d.val);
    for (std::size_t i = 0; i < d.videos.size(); ++i) save_video(video_dir(cfg, i), d.videos[i]);
    save_video(data_dir(cfg) / "videos" / "default", d.default_video);
    std::cout << "gen-data: " << d.train.size() << " train, " << d.val.size() << " val images, " << d.videos.size()
              << " videos (default video " << d.default_video.frames.size() << " frames) -> " << data_dir(cfg)
              << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
    const Dataset d = load_dataset(cfg, true, false);
    const auto cks = train_realizations(cfg, d.train, d.val);
    fs::create_directories(cfg.out / "checkpoints");
    fs::create_directories(reports_dir(cfg));
    Csv csv(reports_dir(cfg) / "train_loss.csv", {"setup", "realization", "epoch", "train_loss", "val_loss"});
    for (std::size_t i = 0; i < cks.size(); ++i) {
        const auto setup = cfg.setups[i / cfg.realizations];
        const auto r = i % cfg.realizations;
        save_checkpoint(checkpoint_path(cfg, setup, r), cks[i]);
        for (const auto& h : cks[i].history) csv.row(to_string(setup), r, h.epoch, h.train_loss, h.val_loss);
        std::cout << "train: " << to_string(setup) << " r" << r << " best epoch " << cks[i].epoch << " val_mse "
                  << fmt(cks[i].val_loss) << "\n";
    }
    return 0;
}

namespace {
std::vector<Checkpoint> load_all_checkpoints(const ExperimentConfig& cfg) {
    std::vector<Checkpoint> cks;
    std::vector<std::string> missing;
    for (auto s : cfg.setups)
        for (std::size_t r = 0; r < cfg.realizations; ++r) {
            const auto p = checkpoint_path(cfg, s, r);
            if (!fs::exists(p)) missing.push_back(p.string());
            else cks.push_back(load_checkpoint(p));
        }
    if (!missing.empty()) {
        std::string msg = "missing checkpoints:";
        for (const auto& m : missing) msg += " " + m;
        throw MissingInputError(msg);
    }
    return cks;
}

void write_histogram(Csv& csv, const std::string& label, const std::vector<double>& values, double lo, double hi,
                     std::size_t bins) {
    std::vector<std::size_t> counts(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        std::size_t b = width > 0 ? static_cast<std::size_t>((v - lo) / width) : 0;
        counts[std::min(b, bins - 1)]++;
    }
    for (std::size_t b = 0; b < bins; ++b)
        csv.row(label, lo + width * static_cast<double>(b), lo + width * static_cast<double>(b + 1), counts[b]);
}

Checkpoint modelled_checkpoint(const ExperimentConfig& cfg) {
    if (std::find(cfg.setups.begin(), cfg.setups.end(), Setup::relu_maxpool) == cfg.setups.end())
        throw ConfigError("channel modelling needs the relu_maxpool setup");
    const auto p = checkpoint_path(cfg, Setup::relu_maxpool, 0);
    require(p);
    return load_checkpoint(p);
}
} // namespace

int cmd_analyze(const ExperimentConfig& cfg) {
    const auto cks = load_all_checkpoints(cfg);
    const Dataset d = load_dataset(cfg, false, true);
    const auto rows = ave_nonsmooth_table(cks, d.videos, cfg.jobs);
    fs::create_directories(reports_dir(cfg));
    {
        Csv csv(reports_dir(cfg) / "avenonsmooth.csv", {"setup", "realization", "video", "value"});
        for (const auto& r : rows)
            csv.row(r.setup, r.realization < 0 ? std::string("na") : std::to_string(r.realization), r.video, r.value);
    }
    std::map<std::string, std::vector<double>> by_setup;
    double hi = 0.0;
    for (const auto& r : rows) {
        by_setup[r.setup].push_back(r.value);
        hi = std::max(hi, r.value);
    }
    Csv hist(reports_dir(cfg) / "avenonsmooth_hist.csv", {"setup", "bin_lo", "bin_hi", "count"});
    for (const auto& [setup, vals] : by_setup) {
        write_histogram(hist, setup, vals, 0.0, hi > 0 ? hi : 1.0, cfg.hist_bins);
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
        std::cout << "analyze: " << setup << " mean AveNonSmooth " << fmt(mean) << " over " << vals.size()
                  << " videos\n";
    }
    return 0;
}

int cmd_fit_channels(const ExperimentConfig& cfg) {
    const Checkpoint ck = modelled_checkpoint(cfg);
    const Dataset d = load_dataset(cfg, false, true);
    const ChainAnalysis a = analyze_chain(ck.net, d.default_video, chain_options(cfg));
    fs::create_directories(reports_dir(cfg));
    save_channel_params(reports_dir(cfg) / "channels.params", a.params);

    {
        Csv csv(reports_dir(cfg) / "smp_pairs.csv", {"boundary", "node_c", "node_r", "node_col", "x", "y"});
        const auto& relu_out = a.smp.at(a.layers.act + 1);
        for (std::size_t i = 0; i < a.relu_pairs.size(); ++i) {
            const std::size_t c = i / (relu_out.rows * relu_out.cols), rem = i % (relu_out.rows * relu_out.cols);
            csv.row(relu_out.boundary, c, rem / relu_out.cols, rem % relu_out.cols, a.relu_pairs[i].x, a.relu_pairs[i].y);
        }
        const auto& pool_out = a.smp.at(a.layers.pool + 1);
        for (std::size_t i = 0; i < a.pool_pairs.size(); ++i) {
            const std::size_t c = i / (pool_out.rows * pool_out.cols), rem = i % (pool_out.rows * pool_out.cols);
            csv.row(pool_out.boundary, c, rem / pool_out.cols, rem % pool_out.cols, a.pool_pairs[i].x, a.pool_pairs[i].y);
        }
    }
    {
        Csv csv(reports_dir(cfg) / "conv_scatter.csv", {"layer", "mode", "row", "col", "predicted", "real"});
        for (const auto& f : a.conv_fits)
            for (std::size_t i = 0; i < f.real.size(); ++i)
                csv.row(f.layer, to_string(f.mode), i / f.cols, i % f.cols, f.predicted[i], f.real[i]);
    }
    {
        // Persist the modelled chain's boundaries for external plotting.
        const auto& L = a.layers;
        save_trace_store(cfg.out / "traces", trace_forward(ck.net, d.default_video, {L.conv, L.act, L.act + 1, L.pool + 1}));
    }
    const auto& p = a.params;
    std::cout << "fit-channels: w0 " << fmt(p.w0) << "; relu theta " << fmt(p.relu.theta) << " sigma "
              << fmt(p.relu.sigma) << "; maxpool low " << (p.pool.low_fit ? "fit" : "UNFIT") << " (n=" << p.pool.low_count
              << ") high " << (p.pool.high_fit ? "fit" : "UNFIT") << " (n=" << p.pool.high_count << ") pi0 "
              << fmt(p.pool.pi0) << "\n";
    return 0;
}

int cmd_predict(const ExperimentConfig& cfg) {
    const auto params_path = reports_dir(cfg) / "channels.params";
    require(params_path);
    const ChannelParamsFile params = load_channel_params(params_path);
    const Checkpoint ck = modelled_checkpoint(cfg);
    const Dataset d = load_dataset(cfg, false, true);
    const ChainAnalysis a = analyze_chain(ck.net, d.default_video, chain_options(cfg), &params);

    const std::map<std::string, double> ref_actual{{"conv2", 0.944}, {"tconv1", 0.79}, {"tconv2", 0.65}, {"tconv3", 0.87}};
    {
        Csv csv(reports_dir(cfg) / "r2_summary.csv", {"layer", "mode", "slope", "intercept", "r2"});
        for (const auto& f : a.conv_fits) {
            const double nan = std::nan("");
            csv.row(f.layer, to_string(f.mode), f.ok ? f.fit.slope : nan, f.ok ? f.fit.intercept : nan,
                    f.ok ? f.fit.r2 : nan);
            std::cout << "predict: " << f.layer << " " << to_string(f.mode) << " R2 " << (f.ok ? fmt(f.fit.r2) : f.error);
            if (f.layer == "conv2" && f.mode == WeightMode::expected) std::cout << " (reference 0.842)";
            else if (f.mode == WeightMode::actual && ref_actual.count(f.layer))
                std::cout << " (reference " << fmt(ref_actual.at(f.layer)) << ")";
            std::cout << "\n";
        }
    }
    {
        Csv csv(reports_dir(cfg) / "pearson.csv", {"layer", "pearson_absw_input_smp"});
        csv.row("conv2", a.weight_pearson);
    }
    {
        Csv csv(reports_dir(cfg) / "wasserstein.csv", {"boundary", "w1", "real_mean", "ratio"});
        const double ratio = a.real_mean > 0 ? a.w1 / a.real_mean : std::nan("");
        csv.row(a.layers.pool + 1, a.w1, a.real_mean, ratio);
        std::cout << "predict: Monte Carlo W1 " << fmt(a.w1) << " vs real mean SMP " << fmt(a.real_mean) << "\n";
    }
    {
        double hi = 0.0;
        for (double v : a.mc_samples) hi = std::max(hi, v);
        for (double v : a.real_output) hi = std::max(hi, v);
        Csv csv(reports_dir(cfg) / "mc_hist.csv", {"source", "bin_lo", "bin_hi", "count"});
        write_histogram(csv, "predicted", a.mc_samples, 0.0, hi > 0 ? hi : 1.0, cfg.hist_bins);
        write_histogram(csv, "real", a.real_output, 0.0, hi > 0 ? hi : 1.0, cfg.hist_bins);
    }
    {
        Csv csv(reports_dir(cfg) / "smp_samples.csv", {"source", "index", "value"});
        for (std::size_t i = 0; i < a.real_output.size(); ++i) csv.row("real", i, a.real_output[i]);
        for (std::size_t i = 0; i < a.mc_samples.size(); ++i) csv.row("predicted", i, a.mc_samples[i]);
    }
    return 0;
}

const std::vector<std::string>& report_tables() {
    static const std::vector<std::string> t{"train_loss.csv",   "avenonsmooth.csv", "avenonsmooth_hist.csv",
                                            "smp_pairs.csv",    "conv_scatter.csv", "r2_summary.csv",
                                            "pearson.csv",      "wasserstein.csv",  "mc_hist.csv",
                                            "smp_samples.csv"};
    return t;
}

std::size_t validate_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingInputError("missing input: " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw ValidationError(path.filename().string() + ": empty file");
    const auto cols = std::count(line.begin(), line.end(), ',') + 1;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        const auto c = std::count(line.begin(), line.end(), ',') + 1;
        if (c != cols)
            throw ValidationError(path.filename().string() + ": row " + std::to_string(rows) + " has " +
                                  std::to_string(c) + " columns, header has " + std::to_string(cols));
    }
    return rows;
}

int cmd_report(const ExperimentConfig& cfg) {
    const fs::path dir = reports_dir(cfg);
    std::vector<std::string> missing;
    for (const auto& t : report_tables())
        if (!fs::exists(dir / t)) missing.push_back((dir / t).string());
    if (!fs::exists(dir / "channels.params")) missing.push_back((dir / "channels.params").string());
    if (!missing.empty()) {
        std::string msg = "report: missing inputs:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw MissingInputError(msg);
    }
    std::ostringstream man;
    man << "nslab report manifest v1\n";
    man << "tool_version=" << kToolVersion << "\n";
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(cfg.canonical())));
    man << "config_hash=" << hash << "\n";
    auto file_hash = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        char h[32];
        std::snprintf(h, sizeof h, "%016llx", static_cast<unsigned long long>(fnv1a64(ss.str())));
        return std::string(h);
    };
    for (const auto& t : report_tables()) {
        const auto rows = validate_csv(dir / t);
        man << "table=" << t << " rows=" << rows << " hash=" << file_hash(dir / t) << "\n";
    }
    man << "params=channels.params hash=" << file_hash(dir / "channels.params") << "\n";
    std::ofstream os(dir / "manifest.txt");
    os << man.str();
    std::cout << "report: " << report_tables().size() << " tables validated, manifest at " << (dir / "manifest.txt")
              << "\n";
    return 0;
}

} // namespace nslab
