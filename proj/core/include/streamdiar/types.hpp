#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace streamdiar {

// Column-major throughout: rows are feature dims / speakers, columns are frames.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// D×N acoustic features. frame_stride is the hop between columns in seconds.
struct FeatureMatrix {
    Matrix data;
    double frame_stride = 0.1;

    Eigen::Index dim() const { return data.rows(); }
    Eigen::Index n_frames() const { return data.cols(); }
};

// S×N per-speaker activity probabilities, entries in (0, 1).
using Posteriors = Matrix;

// S×N binary speaker activity.
struct LabelMatrix {
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> data;
    double frame_stride = 0.1;

    Eigen::Index n_speakers() const { return data.rows(); }
    Eigen::Index n_frames() const { return data.cols(); }
};

} // namespace streamdiar
