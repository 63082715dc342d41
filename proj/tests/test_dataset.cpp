#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "ibo/dataset.hpp"

using namespace ibo;
using Catch::Approx;

namespace {

void require_standardized(const Eigen::MatrixXd& x) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        REQUIRE(std::abs(x.col(j).mean()) < 1e-9);
        const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(x.rows()));
        REQUIRE(sd == Approx(1.0).margin(1e-9));
    }
}

std::string csv_with_rows(int n, int ragged_at = -1) {
    std::ostringstream out;
    out << "f0,f1,label\n";
    for (int i = 0; i < n; ++i) {
        const int line_no = i + 2;  // header is line 1
        if (line_no == ragged_at) out << "0.1,2\n";
        else out << 0.1 * i << ',' << (1.0 - 0.05 * i) << ',' << i % 2 << "\n";
    }
    return out.str();
}

} // namespace

TEST_CASE("built-in generators have fixed shapes and standardized columns") {
    const Dataset moons = make_two_class_synthetic();
    REQUIRE(moons.rows() == 500);
    REQUIRE(moons.cols() == 2);
    REQUIRE(moons.n_classes == 2);
    require_standardized(moons.features);

    const Dataset digits = make_digits_small();
    REQUIRE(digits.rows() == 1000);
    REQUIRE(digits.cols() == 64);
    REQUIRE(digits.n_classes == 10);
    require_standardized(digits.features);

    // generators are deterministic across calls
    const Dataset again = make_two_class_synthetic();
    REQUIRE(moons.features == again.features);
    REQUIRE(moons.labels == again.labels);
}

TEST_CASE("delimited parsing round-trips clean input") {
    const Dataset ds = parse_delimited(csv_with_rows(40));
    REQUIRE(ds.rows() == 40);
    REQUIRE(ds.cols() == 2);
    REQUIRE(ds.n_classes == 2);
    require_standardized(ds.features);
}

TEST_CASE("ragged and malformed rows are reported by line") {
    try {
        parse_delimited(csv_with_rows(40, 17));
        FAIL("expected a parse error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::parse_error);
        REQUIRE(std::string(e.what()).find("row 17") != std::string::npos);
    }

    REQUIRE_THROWS_MATCHES(parse_delimited("a,b,label\n0.1,oops,1\n0.1,0.2,0\n"), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.code() == Errc::parse_error &&
                                      std::string(e.what()).find("row 2") != std::string::npos;
                           }));

    // a label gap means some class never appears
    REQUIRE_THROWS_AS(parse_delimited("a,label\n0.1,0\n0.4,2\n"), Error);
    REQUIRE_THROWS_AS(parse_delimited("a,label\n"), Error);
    REQUIRE_THROWS_AS(parse_delimited(""), Error);
}

TEST_CASE("train/validation split is deterministic and fraction-aware") {
    const Dataset ds = make_two_class_synthetic();
    const TrainDataset full = split_train_validation(ds);
    REQUIRE(full.train.size() == 400);
    REQUIRE(full.validation.size() == 100);
    REQUIRE(full.n_classes == 2);

    RngStream r1(5), r2(5);
    const TrainDataset a = split_train_validation(ds, 1.0 / 8.0, &r1);
    const TrainDataset b = split_train_validation(ds, 1.0 / 8.0, &r2);
    REQUIRE(a.train.size() == 50);
    REQUIRE(a.validation.size() == 100);
    REQUIRE(a.train.features == b.train.features);
    REQUIRE(a.train.labels == b.train.labels);

    const TrainDataset tiny = split_train_validation(ds, 1.0 / 128.0, &r1);
    REQUIRE(tiny.train.size() >= 1);
    REQUIRE_THROWS_AS(split_train_validation(ds, 0.5, nullptr), Error);
    REQUIRE_THROWS_AS(split_train_validation(ds, 0.0, &r1), Error);
}

TEST_CASE("load_dataset dispatches names and missing files") {
    REQUIRE(load_dataset("digits-small").n_classes == 10);
    REQUIRE_THROWS_MATCHES(load_dataset("/nonexistent/path.csv"), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.code() == Errc::io_failure;
                           }));
}
