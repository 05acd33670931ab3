#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "tact/prompts.hpp"
#include "tact/rng.hpp"
#include "testutil.hpp"

using namespace tact;

namespace {
const std::filesystem::path kAssets = TACT_ASSETS_DIR;
}

TEST_CASE("generation prompt list has exactly 42 entries") {
  CHECK(generation_prompts().size() == 42);
}

TEST_CASE("generation prompts match the golden file byte-exactly") {
  const std::string golden = test::read_file(kAssets / "prompts" / "generation_prompts.txt");
  std::string joined;
  for (const auto& p : generation_prompts()) joined += p + "\n";
  CHECK(joined == golden);
}

TEST_CASE("sampling draws members uniformly and deterministically") {
  Rng a(7), b(7);
  CHECK(sample_generation_prompt(a) == sample_generation_prompt(b));

  const auto& prompts = generation_prompts();
  const std::set<std::string> pool(prompts.begin(), prompts.end());
  Rng rng(3);
  std::set<std::string> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto p = sample_generation_prompt(rng);
    CHECK(pool.count(p) == 1);
    seen.insert(p);
  }
  CHECK(seen.size() == 42);  // every entry shows up over 2000 draws
}

TEST_CASE("pseudo-label template matches its golden file byte-exactly") {
  const std::string golden = test::read_file(kAssets / "prompts" / "pseudo_label_prompt.txt");
  CHECK(pseudo_label_template() == golden);
}

TEST_CASE("surface-type slot: filled or omitted entirely") {
  const auto with = build_label_prompt(std::string("fabric"));
  CHECK(with.find("Surface Type: fabric\n") == 0);
  CHECK(with.find("[Specify") == std::string::npos);

  const auto without = build_label_prompt(std::nullopt);
  CHECK(without.find("Surface Type") == std::string::npos);
  CHECK(without.find("Images: The first image") == 0);

  // both end with the five-adjective instruction sentence
  const std::string tail = "Limit your response up to five adjectives, separated by commas.\n";
  CHECK(with.ends_with(tail));
  CHECK(without.ends_with(tail));
}

TEST_CASE("judge template matches its golden file and fills all three slots") {
  const std::string golden = test::read_file(kAssets / "prompts" / "judge_prompt.txt");
  CHECK(judge_template() == golden);

  const auto filled = fill_judge_prompt("Q?", "soft, smooth", "hard, rough");
  CHECK(filled.find("[User Question]: Q?\n") == 0);
  CHECK(filled.find("[Assistant Response]: soft, smooth\n") != std::string::npos);
  CHECK(filled.find("[Correct Response]: hard, rough\n") != std::string::npos);
  CHECK(filled.find("{prompt}") == std::string::npos);
  CHECK(filled.find("{assistant_response}") == std::string::npos);
  CHECK(filled.find("{correct_response}") == std::string::npos);
}
