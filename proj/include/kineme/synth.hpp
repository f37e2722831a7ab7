#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kineme/ingest.hpp"

namespace kineme {

// Class-dependent motion dynamics for the synthetic corpus generator.
struct ClassMotionParams {
    double amplitude_deg = 10.0;      // sinusoidal motion scale
    double drift_deg_per_s = 0.05;    // slow angular drift rate
    double pause_probability = 0.05;  // per-second chance of freezing the pose
    double noise_std_deg = 1.0;       // per-sample Gaussian noise

    bool operator==(const ClassMotionParams&) const = default;
};

// Generator spec: two cohorts whose motion amplitude deficit maps monotonically
// onto a QIDS-like severity score; the binary label is a threshold on that
// severity.
struct GeneratorSpec {
    int videos_per_class = 20;
    ClassMotionParams low;   // healthy / low-depressed: large motion
    ClassMotionParams high;  // depressed: reduced motion
    double amplitude_jitter = 0.25;         // relative per-video jitter
    double link_reference_amplitude = 13.0; // deficit = 1 - amplitude / reference
    int severity_noise = 1;                 // bounded integer noise on severity
    int label_threshold = 13;               // severity > threshold -> high
    int sinusoid_count = 3;
    double min_freq_hz = 0.05;
    double max_freq_hz = 0.4;
    double pause_min_seconds = 0.5;
    double pause_max_seconds = 2.0;
    std::uint64_t seed = 42;
    bool enforce_separation = true;  // reject identical class parameters

    GeneratorSpec() { high.amplitude_deg = 2.0; high.pause_probability = 0.3; }
};

GeneratorSpec generator_spec_from_json(const nlohmann::json& j);
nlohmann::json generator_spec_to_json(const GeneratorSpec& spec);
GeneratorSpec load_generator_spec(const std::string& path);

struct SynthCorpus {
    std::vector<AngleSeries> series;
    CorpusManifest manifest;            // scale QIDS-SR, series_path filled on write
    std::vector<double> amplitudes;     // per-video amplitude parameter (generator truth)
};

// Deterministic given (spec, seed). Series are canonical (3000 samples at
// 10 Hz), values around the 180-degree offset baseline.
SynthCorpus generate_corpus(const GeneratorSpec& spec);

// Write pose CSVs plus manifest.csv into a directory, in exactly the formats
// the ingest module consumes.
void write_corpus(const SynthCorpus& corpus, const std::string& dir, const IngestConfig& config);

}  // namespace kineme
