#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "codec.hpp"
#include "finetune.hpp"

namespace negtune {

// Configuration problems exit with code 2; runtime failures with 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat-section run configuration. Unknown sections or keys are rejected; the
// fully resolved form (defaults expanded) is written next to every run's
// outputs so the file doubles as the experiment record.
struct RunConfig {
    // [corpus]
    std::string train_root, val_root, test_root;
    // [codec]
    CodecConfig codec;
    std::string checkpoint;          // optional starting checkpoint
    std::string decoder_checkpoint;  // optional, pairs a second decoder for evaluation
    // [metric]
    std::string vmaf_model_path;
    // [train]
    TrainConfig train;
    // [loss] (weights/scaling live inside train; 0 scaling means "calibrate")
    std::string scaling_file;
    // [ratematch]
    bool ratematch_enabled = false;
    double ratematch_tolerance = 0.01;
    int ratematch_max_iter = 12;
    int ratematch_probe_epochs = 0; // 0 = the experiment's epoch budget
    // [probe]
    std::vector<std::string> probe_attacks = {"unsharp", "checkerboard", "hline"};
    std::vector<double> probe_strengths = {0.0, 0.25, 0.5, 1.0, 2.0};
    double probe_unsharp_radius = 1.5;
    int probe_checkerboard_period = 2;
    int probe_hline_spacing = 8;
    // [output]
    std::string output_dir = "run";

    static RunConfig parse_file(const std::string& path);
    static RunConfig parse_text(const std::string& text);
    // override a single "section.key" (CLI flags map 1:1 onto these)
    void set_key(const std::string& dotted_key, const std::string& value);
    std::string resolved_text() const;
    void validate() const;
};

} // namespace negtune
