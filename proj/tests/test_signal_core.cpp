#include <doctest.h>

#include <random>
#include <sstream>

#include "gsdeepc/errors.hpp"
#include "gsdeepc/signal_core.hpp"
#include "test_util.hpp"

using namespace gsdeepc;

TEST_CASE("build_hankel scalar layout") {
    Eigen::MatrixXd data(1, 5);
    data << 1, 2, 3, 4, 5;
    Eigen::MatrixXd expected(2, 4);
    expected << 1, 2, 3, 4, 2, 3, 4, 5;
    CHECK(build_hankel(data, 2) == expected);

    Eigen::MatrixXd one(1, 1);
    one << 7;
    CHECK(build_hankel(one, 1) == one);
}

TEST_CASE("build_hankel matches a brute-force window extractor") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd data(2, 10);
    for (Index k = 0; k < 10; ++k) data.col(k) << nd(rng), nd(rng);

    const Index r = 3;
    const Eigen::MatrixXd h = build_hankel(data, r);
    REQUIRE(h.rows() == 6);
    REQUIRE(h.cols() == 8);
    for (Index j = 0; j < 8; ++j) {
        // window j stacked sample-major
        std::vector<double> window;
        for (Index i = 0; i < r; ++i)
            for (Index ch = 0; ch < 2; ++ch) window.push_back(data(ch, j + i));
        for (Index row = 0; row < 6; ++row) CHECK(h(row, j) == window[static_cast<std::size_t>(row)]);
    }
}

TEST_CASE("build_hankel rejects short data") {
    Eigen::MatrixXd data(1, 3);
    data << 1, 2, 3;
    CHECK_THROWS_AS(build_hankel(data, 4), DimensionError);
    CHECK_THROWS_AS(build_hankel(data, 0), DimensionError);
}

TEST_CASE("build_hankel_set column counts") {
    SUBCASE("minimum length segment") {
        std::vector<Trajectory> segs{test::ramp_trajectory(7)};
        const HankelSet h = build_hankel_set(segs, 2, 5);
        CHECK(h.cols() == 1);
        CHECK(h.up.rows() == 2);
        CHECK(h.yf.rows() == 5);
    }
    SUBCASE("mosaic of two segments") {
        std::vector<Trajectory> segs{test::ramp_trajectory(10), test::ramp_trajectory(12, 100.0)};
        const HankelSet h = build_hankel_set(segs, 2, 5);
        CHECK(h.cols() == 10);
        // the first window of the second segment starts where its data starts
        CHECK(h.up(0, 4) == doctest::Approx(100.0));
        // no window straddles the two segments
        CHECK(h.uf(4, 3) == doctest::Approx(9.0));
    }
    SUBCASE("206 samples give 200 columns") {
        std::vector<Trajectory> segs{test::ramp_trajectory(206)};
        CHECK(build_hankel_set(segs, 2, 5).cols() == 200);
    }
    SUBCASE("short segment is rejected") {
        std::vector<Trajectory> segs{test::ramp_trajectory(10), test::ramp_trajectory(6)};
        CHECK_THROWS_AS(build_hankel_set(segs, 2, 5), DimensionError);
    }
}

TEST_CASE("past and future blocks come from one window") {
    std::vector<Trajectory> segs{test::ramp_trajectory(20)};
    const HankelSet h = build_hankel_set(segs, 2, 5);
    for (Index j = 0; j < h.cols(); ++j) {
        CHECK(h.up(1, j) + 1.0 == doctest::Approx(h.uf(0, j)));
        CHECK(h.yp(1, j) + 1.0 == doctest::Approx(h.yf(0, j)));
    }
}

TEST_CASE("column selection") {
    CHECK(select_columns(10, 10, ColumnPolicy::uniform) == std::vector<Index>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(select_columns(10, 5, ColumnPolicy::uniform) == std::vector<Index>{0, 2, 4, 6, 8});
    const auto first = select_columns(400, 200, ColumnPolicy::first);
    CHECK(first.front() == 0);
    CHECK(first.back() == 199);

    // enumeration against floor(1 + (j-1) * available / target), 1-based
    for (Index avail : {7, 13, 200, 1001}) {
        for (Index target : {1, 3, 7}) {
            if (target > avail) continue;
            const auto idx = select_columns(avail, target, ColumnPolicy::uniform);
            REQUIRE(static_cast<Index>(idx.size()) == target);
            for (Index j = 1; j <= target; ++j) CHECK(idx[j - 1] + 1 == 1 + (j - 1) * avail / target);
        }
    }
    CHECK_THROWS_AS(select_columns(5, 6, ColumnPolicy::first), InsufficientDataError);
}

TEST_CASE("truncate_columns keeps the same columns in every block") {
    std::vector<Trajectory> segs{test::ramp_trajectory(16)};
    const HankelSet h = build_hankel_set(segs, 2, 5);
    REQUIRE(h.cols() == 10);
    CHECK(truncate_columns(h, 10, ColumnPolicy::uniform).up == h.up);

    const HankelSet t = truncate_columns(h, 5, ColumnPolicy::uniform);
    CHECK(t.cols() == 5);
    for (Index j = 0; j < 5; ++j) {
        CHECK(t.up.col(j) == h.up.col(2 * j));
        CHECK(t.yp.col(j) == h.yp.col(2 * j));
        CHECK(t.uf.col(j) == h.uf.col(2 * j));
        CHECK(t.yf.col(j) == h.yf.col(2 * j));
    }
    try {
        truncate_columns(h, 12, ColumnPolicy::first);
        FAIL("expected InsufficientDataError");
    } catch (const InsufficientDataError& e) {
        REQUIRE(e.deficits().size() == 1);
        CHECK(e.deficits()[0].available == 10);
        CHECK(e.deficits()[0].required == 12);
    }
}

TEST_CASE("concat_columns") {
    std::vector<Trajectory> a{test::ramp_trajectory(9)};
    std::vector<Trajectory> b{test::ramp_trajectory(10, 50.0)};
    const HankelSet ha = build_hankel_set(a, 2, 5);
    const HankelSet hb = build_hankel_set(b, 2, 5);
    const HankelSet c = concat_columns(ha, hb);
    CHECK(c.cols() == ha.cols() + hb.cols());
    CHECK(c.yf.leftCols(ha.cols()) == ha.yf);
    CHECK(c.yf.rightCols(hb.cols()) == hb.yf);

    std::vector<Trajectory> d{test::ramp_trajectory(9)};
    CHECK_THROWS_AS(concat_columns(ha, build_hankel_set(d, 3, 4)), DimensionError);
}

TEST_CASE("persistency of excitation") {
    SUBCASE("constant input has rank one") {
        Trajectory tr = test::ramp_trajectory(30);
        tr.u.setConstant(0.3);
        std::vector<Trajectory> segs{tr};
        const auto rep = check_persistency(build_hankel_set(segs, 2, 5));
        CHECK(rep.rank == 1);
        CHECK(rep.required_rank == 7);
        CHECK_FALSE(rep.is_pe);
    }
    SUBCASE("random input of length 50") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> ud(-1.0, 1.0);
        Trajectory tr = test::ramp_trajectory(50);
        for (Index k = 0; k < 50; ++k) tr.u(0, k) = ud(rng);
        std::vector<Trajectory> segs{tr};
        const HankelSet h = build_hankel_set(segs, 2, 5);
        REQUIRE(h.cols() == 44);

        Eigen::MatrixXd stacked(7, 44);
        stacked << h.up, h.uf;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
        const auto& s = svd.singularValues();
        Index oracle_rank = 0;
        for (Index i = 0; i < s.size(); ++i) oracle_rank += s(i) >= 1e-9 * s(0) ? 1 : 0;

        const auto rep = check_persistency(h, 1e-9);
        CHECK(rep.rank == oracle_rank);
        CHECK(rep.rank == 7);
        CHECK(rep.is_pe);
    }
    SUBCASE("duplicated single-column segments") {
        Trajectory tr = test::ramp_trajectory(7);
        std::vector<Trajectory> segs{tr, tr};
        const auto rep = check_persistency(build_hankel_set(segs, 2, 5));
        CHECK(rep.rank == 1);
        CHECK_FALSE(rep.is_pe);
    }
    SUBCASE("all-zero data") {
        Trajectory tr = test::ramp_trajectory(20);
        tr.u.setZero();
        std::vector<Trajectory> segs{tr};
        const auto rep = check_persistency(build_hankel_set(segs, 2, 5));
        CHECK(rep.rank == 0);
        CHECK_FALSE(rep.is_pe);
    }
}

TEST_CASE("trajectory validation and slicing") {
    Trajectory tr = test::ramp_trajectory(10);
    CHECK_NOTHROW(tr.validate());
    const Trajectory s = tr.slice(3, 4);
    CHECK(s.length() == 4);
    CHECK(s.u(0, 0) == doctest::Approx(3.0));
    CHECK(s.rho(3) == tr.rho(6));
    CHECK_THROWS(tr.slice(8, 4));

    Trajectory bad = tr;
    bad.rho.resize(9);
    CHECK_THROWS_AS(bad.validate(), DimensionError);
    bad = tr;
    bad.ts = 0.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("trajectory CSV round trip") {
    Trajectory tr = test::ramp_trajectory(25);
    tr.ts = 0.075;
    tr.y *= 0.123456789;
    std::stringstream ss;
    write_trajectory_csv(ss, tr);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "t,u,y,rho");
    ss.seekg(0);
    const Trajectory back = read_trajectory_csv(ss);
    CHECK(back.ts == doctest::Approx(0.075).epsilon(1e-12));
    CHECK(back.u == tr.u);
    CHECK(back.y == tr.y);
    CHECK(back.rho == tr.rho);
}
