#include "kineme/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace kineme {

namespace {

void motion_params_from_json(const nlohmann::json& j, ClassMotionParams& p) {
    p.amplitude_deg = j.value("amplitude_deg", p.amplitude_deg);
    p.drift_deg_per_s = j.value("drift_deg_per_s", p.drift_deg_per_s);
    p.pause_probability = j.value("pause_probability", p.pause_probability);
    p.noise_std_deg = j.value("noise_std_deg", p.noise_std_deg);
}

nlohmann::json motion_params_to_json(const ClassMotionParams& p) {
    return {{"amplitude_deg", p.amplitude_deg},
            {"drift_deg_per_s", p.drift_deg_per_s},
            {"pause_probability", p.pause_probability},
            {"noise_std_deg", p.noise_std_deg}};
}

}  // namespace

GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
    GeneratorSpec s;
    s.videos_per_class = j.value("videos_per_class", s.videos_per_class);
    if (j.contains("low")) motion_params_from_json(j.at("low"), s.low);
    if (j.contains("high")) motion_params_from_json(j.at("high"), s.high);
    s.amplitude_jitter = j.value("amplitude_jitter", s.amplitude_jitter);
    s.link_reference_amplitude = j.value("link_reference_amplitude", s.link_reference_amplitude);
    s.severity_noise = j.value("severity_noise", s.severity_noise);
    s.label_threshold = j.value("label_threshold", s.label_threshold);
    s.sinusoid_count = j.value("sinusoid_count", s.sinusoid_count);
    s.min_freq_hz = j.value("min_freq_hz", s.min_freq_hz);
    s.max_freq_hz = j.value("max_freq_hz", s.max_freq_hz);
    s.pause_min_seconds = j.value("pause_min_seconds", s.pause_min_seconds);
    s.pause_max_seconds = j.value("pause_max_seconds", s.pause_max_seconds);
    s.seed = j.value("seed", s.seed);
    s.enforce_separation = j.value("enforce_separation", s.enforce_separation);
    return s;
}

nlohmann::json generator_spec_to_json(const GeneratorSpec& s) {
    return {{"videos_per_class", s.videos_per_class},
            {"low", motion_params_to_json(s.low)},
            {"high", motion_params_to_json(s.high)},
            {"amplitude_jitter", s.amplitude_jitter},
            {"link_reference_amplitude", s.link_reference_amplitude},
            {"severity_noise", s.severity_noise},
            {"label_threshold", s.label_threshold},
            {"sinusoid_count", s.sinusoid_count},
            {"min_freq_hz", s.min_freq_hz},
            {"max_freq_hz", s.max_freq_hz},
            {"pause_min_seconds", s.pause_min_seconds},
            {"pause_max_seconds", s.pause_max_seconds},
            {"seed", s.seed},
            {"enforce_separation", s.enforce_separation}};
}

GeneratorSpec load_generator_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open generator spec: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("generator spec parse error in " + path + ": " + e.what());
    }
    return generator_spec_from_json(j);
}

namespace {

struct VideoDraw {
    AngleSeries series;
    double amplitude = 0.0;
    int severity = 0;
};

VideoDraw generate_video(const GeneratorSpec& spec, const ClassMotionParams& cls,
                         const std::string& id, std::uint64_t seed, const IngestConfig& cfg) {
    Rng rng(seed);
    const int n = cfg.canonical_samples();
    const double dt = 1.0 / cfg.sample_rate_hz;

    VideoDraw out;
    out.amplitude = cls.amplitude_deg * (1.0 + spec.amplitude_jitter * rng.uniform(-1.0, 1.0));

    // per-axis sinusoid bank (nods, turns, tilts) plus a slow drift
    struct Wave {
        double amp, freq, phase;
    };
    std::vector<std::vector<Wave>> waves(3);
    std::vector<double> drift(3);
    for (int axis = 0; axis < 3; ++axis) {
        double share_total = 0.0;
        std::vector<double> shares(static_cast<std::size_t>(spec.sinusoid_count));
        for (auto& s : shares) {
            s = rng.uniform(0.5, 1.0);
            share_total += s;
        }
        for (int w = 0; w < spec.sinusoid_count; ++w) {
            Wave wave;
            wave.amp = out.amplitude * shares[static_cast<std::size_t>(w)] / share_total;
            wave.freq = rng.uniform(spec.min_freq_hz, spec.max_freq_hz);
            wave.phase = rng.uniform(0.0, 2.0 * M_PI);
            waves[static_cast<std::size_t>(axis)].push_back(wave);
        }
        drift[static_cast<std::size_t>(axis)] = cls.drift_deg_per_s * rng.uniform(-1.0, 1.0);
    }

    out.series.video_id = id;
    out.series.sample_rate_hz = cfg.sample_rate_hz;
    out.series.samples.resize(n, 3);
    double pause_left = 0.0;
    double frozen[3] = {0.0, 0.0, 0.0};
    const double pause_per_sample = cls.pause_probability * dt;
    for (int j = 0; j < n; ++j) {
        const double t = static_cast<double>(j) * dt;
        double value[3];
        if (pause_left > 0.0) {
            pause_left -= dt;
            value[0] = frozen[0];
            value[1] = frozen[1];
            value[2] = frozen[2];
        } else {
            for (int axis = 0; axis < 3; ++axis) {
                double v = drift[static_cast<std::size_t>(axis)] * t;
                for (const auto& w : waves[static_cast<std::size_t>(axis)]) {
                    v += w.amp * std::sin(2.0 * M_PI * w.freq * t + w.phase);
                }
                value[axis] = v;
            }
            if (rng.uniform() < pause_per_sample) {
                pause_left = rng.uniform(spec.pause_min_seconds, spec.pause_max_seconds);
                frozen[0] = value[0];
                frozen[1] = value[1];
                frozen[2] = value[2];
            }
        }
        for (int axis = 0; axis < 3; ++axis) {
            double v = value[axis];
            if (cls.noise_std_deg > 0.0) v += rng.normal(0.0, cls.noise_std_deg);
            out.series.samples(j, axis) = wrap_degrees(v + cfg.offset_degrees);
        }
    }

    // Severity link: motion deficit relative to the reference amplitude maps
    // linearly onto [0, 27], plus bounded integer noise.
    const double deficit =
        std::clamp(1.0 - out.amplitude / spec.link_reference_amplitude, 0.0, 1.0);
    int severity = static_cast<int>(std::lround(27.0 * deficit));
    if (spec.severity_noise > 0) {
        severity += static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(spec.severity_noise) + 1)) -
                    spec.severity_noise;
    }
    out.severity = std::clamp(severity, 0, 27);
    return out;
}

}  // namespace

SynthCorpus generate_corpus(const GeneratorSpec& spec) {
    if (spec.videos_per_class < 1) throw ConfigError("generator: videos_per_class must be >= 1");
    // zero amplitude is allowed (degenerate constant-pose series); negatives are not
    if (spec.low.amplitude_deg < 0.0 || spec.high.amplitude_deg < 0.0) {
        throw ConfigError("generator: amplitudes must be non-negative");
    }
    if (spec.low.pause_probability < 0.0 || spec.low.pause_probability > 1.0 ||
        spec.high.pause_probability < 0.0 || spec.high.pause_probability > 1.0) {
        throw ConfigError("generator: pause probability must be in [0, 1]");
    }
    if (spec.enforce_separation && spec.low == spec.high) {
        throw ConfigError("generator: identical class parameters requested with separation "
                          "enforcement enabled");
    }

    IngestConfig cfg;  // canonical 10 Hz / 300 s grid
    SynthCorpus corpus;
    for (int cls = 0; cls < 2; ++cls) {
        const auto& params = cls == 0 ? spec.low : spec.high;
        const char* prefix = cls == 0 ? "low" : "high";
        for (int v = 0; v < spec.videos_per_class; ++v) {
            char id[32];
            std::snprintf(id, sizeof(id), "%s_%03d", prefix, v);
            VideoDraw draw = generate_video(
                spec, params, id,
                mix_seed(spec.seed, 0x73796e74, static_cast<std::uint64_t>(cls),
                         static_cast<std::uint64_t>(v)),
                cfg);
            ManifestRecord rec;
            rec.video_id = id;
            rec.series_path = std::string(id) + ".csv";
            rec.scale = Scale::QidsSr;
            rec.raw_score = draw.severity;
            rec.binary_label =
                draw.severity > spec.label_threshold ? BinaryLabel::High : BinaryLabel::Low;
            corpus.manifest.records.push_back(std::move(rec));
            corpus.amplitudes.push_back(draw.amplitude);
            corpus.series.push_back(std::move(draw.series));
        }
    }
    return corpus;
}

void write_corpus(const SynthCorpus& corpus, const std::string& dir, const IngestConfig& config) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    for (std::size_t i = 0; i < corpus.series.size(); ++i) {
        write_pose_csv((base / corpus.manifest.records[i].series_path).string(),
                       corpus.series[i], config);
    }
    write_manifest((base / "manifest.csv").string(), corpus.manifest);
}

}  // namespace kineme
