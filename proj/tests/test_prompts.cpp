// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/prompts.hpp"

#include <doctest.h>

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "raha/util.hpp"
#include "test_support.hpp"

using namespace raha;

namespace {

const char* kAcademicRoot = "A study of hierarchical message passing for long documents.";
const char* kAcademicLeaf = "A survey of graph pooling methods for structured inputs.";
const char* kPatentRoot = "A valve assembly with serviceable seals.";
const char* kPatentLeaf = "A gasket arrangement for pipe couplings.";

std::vector<IndexedUpdate> academic_updates() {
    return {
        {1, "The reference focuses on pooling rather than message passing."},
        {2, "The reference surveys methods instead of proposing one."},
    };
}

// Goldens are stored with a single trailing newline so editors keep them
// intact; the rendered text itself does not end in one.
std::string golden(const std::string& name) {
    std::string text = read_file(std::filesystem::path(RAHA_GOLDEN_DIR) / name);
    REQUIRE(!text.empty());
    REQUIRE(text.back() == '\n');
    text.pop_back();
    return text;
}

}  // namespace

TEST_CASE("academic pair prompts match goldens byte for byte") {
    const auto t = TemplateSet::builtin_academic();
    const PairPrompt p = build_pair_prompt(t, kAcademicRoot, kAcademicLeaf);
    CHECK(p.template_id == "academic");
    CHECK(p.task1_text == golden("pair_academic_task1.txt"));
    CHECK(p.task2_text == golden("pair_academic_task2.txt"));
}

TEST_CASE("patent pair prompts match goldens byte for byte") {
    const auto t = TemplateSet::builtin_patent();
    const PairPrompt p = build_pair_prompt(t, kPatentRoot, kPatentLeaf);
    CHECK(p.template_id == "patent");
    CHECK(p.task1_text == golden("pair_patent_task1.txt"));
    CHECK(p.task2_text == golden("pair_patent_task2.txt"));
}

TEST_CASE("aggregation prompt with no prior matches golden and renders None") {
    const auto t = TemplateSet::builtin_academic();
    const AggregationPrompt a =
        build_aggregation_prompt(t, kAcademicRoot, academic_updates(), std::nullopt);
    CHECK(a.text == golden("aggregation_academic_none.txt"));
    CHECK(a.prior_rendered == "None");
    CHECK(a.text.find("[DINDEX]None[DINDEX]") != std::string::npos);
}

TEST_CASE("aggregation prompt with numeric prior matches golden") {
    const auto t = TemplateSet::builtin_academic();
    const AggregationPrompt a =
        build_aggregation_prompt(t, kAcademicRoot, academic_updates(), 0.1234);
    CHECK(a.text == golden("aggregation_academic_prior.txt"));
    CHECK(a.prior_rendered == "0.1234");
    CHECK(a.text.find("[DINDEX]0.1234[DINDEX]") != std::string::npos);
}

TEST_CASE("empty update list renders the explicit empty-updates line") {
    const auto t = TemplateSet::builtin_patent();
    const AggregationPrompt a = build_aggregation_prompt(t, kPatentRoot, {}, std::nullopt);
    CHECK(a.text == golden("aggregation_patent_none_empty.txt"));
    CHECK(a.text.find(std::string(kEmptyUpdatesLine)) != std::string::npos);
}

TEST_CASE("priors always render with four decimals") {
    const auto t = TemplateSet::builtin_academic();
    auto rendered = [&](double prior) {
        return build_aggregation_prompt(t, kAcademicRoot, {}, prior).prior_rendered;
    };
    CHECK(rendered(1.0 / 3.0) == "0.3333");
    CHECK(rendered(-0.5) == "-0.5000");
    CHECK(rendered(0.0) == "0.0000");
    CHECK(rendered(1.0) == "1.0000");
}

TEST_CASE("non-finite priors are rejected") {
    const auto t = TemplateSet::builtin_academic();
    CHECK_THROWS_AS(build_aggregation_prompt(t, kAcademicRoot, {},
                                             std::numeric_limits<double>::quiet_NaN()),
                    ValidationError);
    CHECK_THROWS_AS(build_aggregation_prompt(t, kAcademicRoot, {},
                                             std::numeric_limits<double>::infinity()),
                    ValidationError);
}

TEST_CASE("updates are numbered sequentially in kept order") {
    const auto t = TemplateSet::builtin_academic();
    const std::vector<IndexedUpdate> updates = {{2, "second leaf kept"}, {5, "fifth leaf kept"}};
    const AggregationPrompt a = build_aggregation_prompt(t, kAcademicRoot, updates, std::nullopt);
    CHECK(a.text.find("1. second leaf kept\n2. fifth leaf kept") != std::string::npos);
}

TEST_CASE("rendering identical inputs twice is byte-identical") {
    const auto t = TemplateSet::builtin_academic();
    const auto a = build_aggregation_prompt(t, kAcademicRoot, academic_updates(), 0.25);
    const auto b = build_aggregation_prompt(t, kAcademicRoot, academic_updates(), 0.25);
    CHECK(a.text == b.text);
    const auto p1 = build_pair_prompt(t, kAcademicRoot, kAcademicLeaf);
    const auto p2 = build_pair_prompt(t, kAcademicRoot, kAcademicLeaf);
    CHECK(p1.task1_text == p2.task1_text);
    CHECK(p1.task2_text == p2.task2_text);
}

TEST_CASE("empty root or leaf text is rejected") {
    const auto t = TemplateSet::builtin_academic();
    CHECK_THROWS_AS(build_pair_prompt(t, "", kAcademicLeaf), ValidationError);
    CHECK_THROWS_AS(build_pair_prompt(t, kAcademicRoot, "  \n "), ValidationError);
    CHECK_THROWS_AS(build_aggregation_prompt(t, "", {}, std::nullopt), ValidationError);
}

TEST_CASE("slot budget truncates substituted texts") {
    const auto t = TemplateSet::builtin_academic();
    PromptLimits limits;
    limits.slot_budget = 12;
    const std::string long_leaf(200, 'x');
    const PairPrompt p = build_pair_prompt(t, kAcademicRoot, long_leaf, limits);
    CHECK(p.task1_text.find(std::string(12, 'x')) != std::string::npos);
    CHECK(p.task1_text.find(std::string(13, 'x')) == std::string::npos);
    const AggregationPrompt a = build_aggregation_prompt(
        t, kAcademicRoot, {{1, long_leaf}}, std::nullopt, limits);
    CHECK(a.text.find(std::string(13, 'x')) == std::string::npos);
}

TEST_CASE("template validation rejects malformed placeholder sets") {
    TemplateSet t = TemplateSet::builtin_academic();
    CHECK_NOTHROW(t.validate());

    TemplateSet bad = t;
    bad.pair_task1 = "only {abstract} here";
    CHECK_THROWS_AS(bad.validate(), TemplateError);  // missing {reference}

    bad = t;
    bad.pair_task2 = t.pair_task2 + " {bogus}";
    CHECK_THROWS_AS(bad.validate(), TemplateError);  // unknown placeholder

    bad = t;
    bad.aggregation = t.aggregation + " {abstract";
    CHECK_THROWS_AS(bad.validate(), TemplateError);  // unterminated brace

    bad = t;
    bad.aggregation = "{abstract} {updates} {Property}";
    CHECK_THROWS_AS(bad.validate(), TemplateError);  // prior slot not marker-delimited

    bad = t;
    bad.aggregation = t.aggregation + "\n[DINDEX]{Property}[DINDEX]";
    CHECK_THROWS_AS(bad.validate(), TemplateError);  // duplicated prior slot

    bad = t;
    bad.pair_task1 = "{abstract} {reference} { }";
    CHECK_THROWS_AS(bad.validate(), TemplateError);  // malformed name
}

TEST_CASE("load_dir reads a template directory and validates it") {
    test::TempDir tmp("templates");
    const auto t = TemplateSet::builtin_academic();
    write_file_atomic(tmp / "pair_task1.txt", t.pair_task1);
    write_file_atomic(tmp / "pair_task2.txt", t.pair_task2);
    write_file_atomic(tmp / "aggregation.txt", t.aggregation);

    const TemplateSet loaded = TemplateSet::load_dir(tmp.path());
    CHECK(loaded.id == "custom");
    CHECK(loaded.pair_task1 == t.pair_task1);
    const auto a = build_aggregation_prompt(loaded, kAcademicRoot, {}, 0.5);
    CHECK(a.prior_rendered == "0.5000");

    // Missing files and invalid templates fail at load time.
    std::filesystem::remove(tmp / "aggregation.txt");
    CHECK_THROWS_AS(TemplateSet::load_dir(tmp.path()), IoError);
    write_file_atomic(tmp / "aggregation.txt", "{abstract} {updates} {Property}");
    CHECK_THROWS_AS(TemplateSet::load_dir(tmp.path()), TemplateError);
}

TEST_CASE("parse_pair_response reads the importance bit and comparison text") {
    auto ok = parse_pair_response("1", "differs in scope");
    REQUIRE(ok.has_value());
    CHECK(ok->attention == 1);
    CHECK(ok->update_text == "differs in scope");

    ok = parse_pair_response("0", "contrast text");
    REQUIRE(ok.has_value());
    CHECK(ok->attention == 0);

    // Leading whitespace and surrounding punctuation are tolerated.
    ok = parse_pair_response("  \"1\".", "x");
    REQUIRE(ok.has_value());
    CHECK(ok->attention == 1);

    ok = parse_pair_response("0,", " padded update \n");
    REQUIRE(ok.has_value());
    CHECK(ok->attention == 0);
    CHECK(ok->update_text == "padded update");
}

TEST_CASE("parse_pair_response refuses ambiguous or empty replies") {
    CHECK_FALSE(parse_pair_response("maybe", "x").has_value());
    CHECK_FALSE(parse_pair_response("10", "x").has_value());
    CHECK_FALSE(parse_pair_response("", "x").has_value());
    CHECK_FALSE(parse_pair_response("the answer is 1", "x").has_value());
    CHECK_FALSE(parse_pair_response("1", "").has_value());
    CHECK_FALSE(parse_pair_response("1", "   \n ").has_value());
}
