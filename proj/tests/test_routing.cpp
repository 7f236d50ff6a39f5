#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "rgconf/routing.hpp"

#include "fixtures.hpp"

using namespace rgconf;

namespace {

std::map<std::string, double> uniform_confidences(int n) {
    std::map<std::string, double> conf;
    for (int i = 0; i < n; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "q%03d", i);
        conf[buf] = 0.005 + 0.01 * i;
    }
    return conf;
}

}  // namespace

TEST_CASE("select_bottom_k sizing is ceil(k% * n)") {
    CHECK(select_bottom_k(uniform_confidences(20), 15.0).size() == 3);
    CHECK(select_bottom_k(uniform_confidences(20), 100.0).size() == 20);
    CHECK(select_bottom_k(uniform_confidences(20), 1.0).size() == 1);     // ceil(0.2)
    CHECK(select_bottom_k(uniform_confidences(3), 34.0).size() == 2);     // ceil(1.02)
}

TEST_CASE("select_bottom_k breaks ties by question id") {
    std::map<std::string, double> conf{{"a", 0.2}, {"b", 0.2}, {"c", 0.9}};
    auto one = select_bottom_k(conf, 30.0);  // ceil(0.9) = 1
    REQUIRE(one == std::vector<std::string>{"a"});
    auto two = select_bottom_k(conf, 34.0);  // ceil(1.02) = 2
    REQUIRE(two == std::vector<std::string>{"a", "b"});
}

TEST_CASE("select_bottom_k validates k") {
    auto conf = uniform_confidences(5);
    CHECK_THROWS_AS(select_bottom_k(conf, 0.0), ParamError);
    CHECK_THROWS_AS(select_bottom_k(conf, -3.0), ParamError);
    CHECK_THROWS_AS(select_bottom_k(conf, 100.5), ParamError);
    CHECK_THROWS_AS(select_bottom_k({}, 10.0), DataError);
}

TEST_CASE("identity interventions never move accuracy") {
    auto conf = uniform_confidences(40);
    std::vector<OutcomeFixture> fixtures;
    std::mt19937_64 rng(8);
    for (const auto& [qid, c] : conf) {
        bool base = rng() % 2;
        fixtures.push_back({qid, base, base});
    }
    for (double k : {5.0, 25.0, 50.0, 100.0}) {
        auto outcome = simulate(RoutingPolicy{k, Intervention::reflect}, fixtures, conf);
        CHECK(outcome.delta == 0.0);
        CHECK(outcome.wrong_to_right == 0);
        CHECK(outcome.right_to_wrong == 0);
    }
}

TEST_CASE("the 100-question benchmark reproduces hand-computed accuracies") {
    auto fixture = fixtures::routing_benchmark();

    auto outcome5 = simulate(RoutingPolicy{5, Intervention::reflect}, fixture.outcomes, fixture.confidences);
    CHECK(outcome5.base_accuracy == Catch::Approx(0.49));
    CHECK(outcome5.after_accuracy == Catch::Approx(0.51));
    CHECK(outcome5.selected == 5);

    auto outcome10 = simulate(RoutingPolicy{10, Intervention::reflect}, fixture.outcomes, fixture.confidences);
    CHECK(outcome10.after_accuracy == Catch::Approx(0.53));

    auto outcome15 = simulate(RoutingPolicy{15, Intervention::reflect}, fixture.outcomes, fixture.confidences);
    CHECK(outcome15.after_accuracy == Catch::Approx(0.54));
    CHECK(outcome15.wrong_to_right == 5);
    CHECK(outcome15.right_to_wrong == 0);

    auto outcome100 = simulate(RoutingPolicy{100, Intervention::reflect}, fixture.outcomes, fixture.confidences);
    CHECK(outcome100.after_accuracy == Catch::Approx(0.52));
    CHECK(outcome100.wrong_to_right == 5);
    CHECK(outcome100.right_to_wrong == 2);

    // Intervening on everything underperforms the targeted bottom-15.
    CHECK(outcome100.after_accuracy < outcome15.after_accuracy);
}

TEST_CASE("benign interventions make accuracy non-decreasing in k") {
    std::mt19937_64 rng(17);
    auto conf = uniform_confidences(60);
    std::vector<OutcomeFixture> fixtures;
    for (const auto& [qid, c] : conf) {
        bool base = rng() % 2;
        bool intervened = base || (rng() % 3 == 0);  // never breaks a correct answer
        fixtures.push_back({qid, base, intervened});
    }
    double last = 0.0;
    for (double k : {5.0, 10.0, 15.0, 40.0, 70.0, 100.0}) {
        auto outcome = simulate(RoutingPolicy{k, Intervention::cascade}, fixtures, conf);
        CHECK(outcome.after_accuracy >= last - 1e-12);
        last = outcome.after_accuracy;
    }

    // k = 100 is exactly the intervened mean.
    long intervened_correct = 0;
    for (const auto& f : fixtures) intervened_correct += f.intervened_correct;
    auto all = simulate(RoutingPolicy{100, Intervention::cascade}, fixtures, conf);
    CHECK(all.after_accuracy == Catch::Approx(static_cast<double>(intervened_correct) / 60.0));
}

TEST_CASE("selection is invariant under monotone confidence transforms") {
    auto fixture = fixtures::routing_benchmark();
    std::map<std::string, double> squashed;
    for (const auto& [qid, c] : fixture.confidences) squashed[qid] = std::sqrt(c) * 0.3;
    for (double k : {5.0, 15.0, 50.0}) {
        CHECK(select_bottom_k(fixture.confidences, k) == select_bottom_k(squashed, k));
    }
}

TEST_CASE("a selected question without a fixture is an error") {
    auto conf = uniform_confidences(10);
    std::vector<OutcomeFixture> fixtures;
    for (const auto& [qid, c] : conf) {
        if (qid != "q000") fixtures.push_back({qid, true, true});
    }
    CHECK_THROWS_WITH(simulate(RoutingPolicy{10, Intervention::reflect}, fixtures, conf),
                      Catch::Matchers::ContainsSubstring("q000"));
}

TEST_CASE("fixture files parse and reject malformed lines") {
    std::istringstream good(
        "{\"question_id\": \"a\", \"base_correct\": true, \"intervened_correct\": false}\n"
        "\n"
        "{\"question_id\": \"b\", \"base_correct\": false, \"intervened_correct\": true}\n");
    auto fixtures = parse_fixtures(good);
    REQUIRE(fixtures.size() == 2);
    CHECK(fixtures[0].question_id == "a");
    CHECK(fixtures[1].intervened_correct);

    std::istringstream bad("{\"question_id\": \"a\"}\n");
    CHECK_THROWS_AS(parse_fixtures(bad), DataError);
}
