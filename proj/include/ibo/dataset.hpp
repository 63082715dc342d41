#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ibo/common.hpp"
#include "ibo/trainer.hpp"

namespace ibo {

/// Feature matrix (standardized per column) plus integer labels 0..C-1.
struct Dataset {
    Eigen::MatrixXd features;
    std::vector<int> labels;
    int n_classes = 0;

    Eigen::Index rows() const { return features.rows(); }
    Eigen::Index cols() const { return features.cols(); }
};

namespace detail {

inline void standardize_columns(Eigen::MatrixXd& x) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mu = x.col(j).mean();
        x.col(j).array() -= mu;
        const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(x.rows()));
        if (sd > 1e-12) x.col(j) /= sd;
    }
}

inline void finalize_labels(Dataset& ds) {
    int max_label = -1;
    for (int l : ds.labels) max_label = std::max(max_label, l);
    ds.n_classes = max_label + 1;
    std::vector<int> counts(static_cast<std::size_t>(ds.n_classes), 0);
    for (int l : ds.labels) ++counts[static_cast<std::size_t>(l)];
    for (int c = 0; c < ds.n_classes; ++c)
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw Error(Errc::invalid_argument,
                        "label " + std::to_string(c) + " never appears in the data");
}

// 8x8 digit glyphs for the built-in digits-style set.
inline const std::array<std::array<const char*, 8>, 10>& digit_glyphs() {
    static const std::array<std::array<const char*, 8>, 10> glyphs = {{
        {{"..####..", ".#....#.", ".#...##.", ".#..#.#.", ".#.#..#.", ".##...#.", ".#....#.", "..####.."}},
        {{"...##...", "..###...", "...#....", "...#....", "...#....", "...#....", "...#....", ".######."}},
        {{"..####..", ".#....#.", "......#.", ".....#..", "....#...", "..##....", ".#......", ".######."}},
        {{"..####..", ".#....#.", "......#.", "...###..", "......#.", "......#.", ".#....#.", "..####.."}},
        {{".....#..", "....##..", "...#.#..", "..#..#..", ".#...#..", ".######.", ".....#..", ".....#.."}},
        {{".######.", ".#......", ".#......", ".#####..", "......#.", "......#.", ".#....#.", "..####.."}},
        {{"..####..", ".#......", ".#......", ".#####..", ".#....#.", ".#....#.", ".#....#.", "..####.."}},
        {{".######.", "......#.", ".....#..", "....#...", "...#....", "...#....", "...#....", "...#...."}},
        {{"..####..", ".#....#.", ".#....#.", "..####..", ".#....#.", ".#....#.", ".#....#.", "..####.."}},
        {{"..####..", ".#....#.", ".#....#.", "..#####.", "......#.", "......#.", "......#.", "..####.."}},
    }};
    return glyphs;
}

} // namespace detail

/// Two interleaved half-moons, 500 rows, 2 features, 2 classes. Deterministic.
inline Dataset make_two_class_synthetic() {
    constexpr int per_class = 250;
    RngStream rng(0x2c1a55u);
    Dataset ds;
    ds.features.resize(2 * per_class, 2);
    ds.labels.resize(2 * per_class);
    for (int i = 0; i < per_class; ++i) {
        const double theta = M_PI * static_cast<double>(i) / (per_class - 1);
        ds.features(i, 0) = std::cos(theta) + rng.normal(0.0, 0.15);
        ds.features(i, 1) = std::sin(theta) + rng.normal(0.0, 0.15);
        ds.labels[static_cast<std::size_t>(i)] = 0;
        const int j = per_class + i;
        ds.features(j, 0) = 1.0 - std::cos(theta) + rng.normal(0.0, 0.15);
        ds.features(j, 1) = 0.5 - std::sin(theta) + rng.normal(0.0, 0.15);
        ds.labels[static_cast<std::size_t>(j)] = 1;
    }
    detail::standardize_columns(ds.features);
    detail::finalize_labels(ds);
    return ds;
}

/// Noisy 8x8 digit glyphs, 1000 rows, 64 features, 10 classes. Deterministic.
/// The pixel noise is sized so tuned models land around 5-10% validation
/// error and poor configurations stay far above it.
inline Dataset make_digits_small() {
    constexpr int per_class = 100;
    RngStream rng(0xd161757u);
    const auto& glyphs = detail::digit_glyphs();
    Dataset ds;
    ds.features.resize(10 * per_class, 64);
    ds.labels.resize(10 * per_class);
    Eigen::Index row = 0;
    for (int digit = 0; digit < 10; ++digit) {
        for (int rep = 0; rep < per_class; ++rep, ++row) {
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c) {
                    const double base = glyphs[static_cast<std::size_t>(digit)]
                                              [static_cast<std::size_t>(r)][c] == '#'
                                            ? 1.0
                                            : 0.0;
                    ds.features(row, 8 * r + c) = base + rng.normal(0.0, 0.5);
                }
            ds.labels[static_cast<std::size_t>(row)] = digit;
        }
    }
    detail::standardize_columns(ds.features);
    detail::finalize_labels(ds);
    return ds;
}

/// Parse delimited text: header row, comma-separated numeric features, final
/// integer label column. Row numbers in errors are 1-based file lines.
inline Dataset parse_delimited(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw Error(Errc::parse_error, "empty dataset: missing header row");

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t n_cols = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        if (cells.size() < 2)
            throw Error(Errc::parse_error,
                        "row " + std::to_string(line_no) + ": need features plus a label column");
        if (n_cols == 0) n_cols = cells.size();
        if (cells.size() != n_cols)
            throw Error(Errc::parse_error, "row " + std::to_string(line_no) + ": ragged row with " +
                                               std::to_string(cells.size()) + " cells, expected " +
                                               std::to_string(n_cols));
        std::vector<double> feat(n_cols - 1);
        for (std::size_t j = 0; j + 1 < n_cols; ++j) {
            try {
                std::size_t pos = 0;
                feat[j] = std::stod(cells[j], &pos);
                if (pos != cells[j].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw Error(Errc::parse_error, "row " + std::to_string(line_no) +
                                                   ": non-numeric cell '" + cells[j] + "'");
            }
        }
        int label = 0;
        try {
            std::size_t pos = 0;
            label = std::stoi(cells.back(), &pos);
            if (pos != cells.back().size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(Errc::parse_error, "row " + std::to_string(line_no) +
                                               ": non-integer label '" + cells.back() + "'");
        }
        if (label < 0)
            throw Error(Errc::parse_error,
                        "row " + std::to_string(line_no) + ": negative label " + std::to_string(label));
        rows.push_back(std::move(feat));
        labels.push_back(label);
    }
    if (rows.empty()) throw Error(Errc::parse_error, "dataset has a header but no data rows");

    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(n_cols - 1));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j + 1 < n_cols; ++j)
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.labels = std::move(labels);
    detail::standardize_columns(ds.features);
    detail::finalize_labels(ds);
    return ds;
}

/// Load a built-in generator by name or a delimited-text file by path.
inline Dataset load_dataset(const std::string& source) {
    if (source == "synthetic-2class") return make_two_class_synthetic();
    if (source == "digits-small") return make_digits_small();
    std::ifstream in(source);
    if (!in) throw Error(Errc::io_failure, "cannot open dataset file '" + source + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_delimited(buf.str());
}

/// Deterministic 80/20 split (every fifth row validates). With fraction < 1 a
/// uniformly subsampled share of the training rows is kept, drawn without
/// replacement from `rng`.
inline TrainDataset split_train_validation(const Dataset& ds, double fraction = 1.0,
                                           RngStream* rng = nullptr) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw Error(Errc::invalid_argument, "training fraction must lie in (0, 1]");
    std::vector<int> train_idx, val_idx;
    for (int i = 0; i < static_cast<int>(ds.rows()); ++i)
        (i % 5 == 4 ? val_idx : train_idx).push_back(i);

    if (fraction < 1.0) {
        if (rng == nullptr)
            throw Error(Errc::invalid_argument, "subsampling a training fraction needs an rng");
        const auto keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train_idx.size()))));
        for (std::size_t i = 0; i < keep; ++i) {
            const std::size_t j = i + rng->uniform_index(train_idx.size() - i);
            std::swap(train_idx[i], train_idx[j]);
        }
        train_idx.resize(keep);
    }

    Batch all;
    all.features = ds.features;
    all.labels = ds.labels;
    TrainDataset out;
    out.train = all.subset(train_idx);
    out.validation = all.subset(val_idx);
    out.n_classes = ds.n_classes;
    return out;
}

} // namespace ibo
