// Copyright 2026 The smodice-tabular Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <string>

#include <gtest/gtest.h>

#include "smodice/io.hpp"
#include "smodice/random.hpp"

namespace smodice {
namespace {

namespace fs = std::filesystem;
const WarningSink kQuiet;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("smodice_io_" + std::to_string(::getpid()) + "_" + name);
}

TEST(MdpJson, RoundTrip) {
  Rng rng(1);
  const TabularMdp mdp = random_mdp(rng, 3, 2, 0.95);
  const TabularMdp back = io::mdp_from_json(io::json::parse(io::mdp_to_json(mdp).dump()));
  EXPECT_EQ(back.transition(), mdp.transition());
  EXPECT_EQ(back.initial_dist(), mdp.initial_dist());
  EXPECT_EQ(back.discount(), mdp.discount());
}

TEST(MdpJson, RejectsNonStochasticRows) {
  io::json j = io::mdp_to_json(build_mdp(preset("figure2a"), 0.9, kQuiet));
  j["transition"][0][0][0] = 0.5;
  EXPECT_THROW(io::mdp_from_json(j), ParseError);
  j = io::mdp_to_json(build_mdp(preset("figure2a"), 0.9, kQuiet));
  j["transition"][1].erase(0);
  EXPECT_THROW(io::mdp_from_json(j), ParseError);
  EXPECT_THROW(io::mdp_from_json(io::json{{"num_states", 1}}), ParseError);
}

TEST(GridJson, RoundTripAndDefaults) {
  GridSpec g = preset("figure2b");
  g.walls = {{1, 1}, {2, 3}};
  g.slip_prob = 0.1;
  g.move_set = MoveSet::Diagonal8;
  const GridSpec back = io::grid_from_json(io::grid_to_json(g));
  EXPECT_EQ(back.walls, g.walls);
  EXPECT_EQ(back.goal, g.goal);
  EXPECT_EQ(back.move_set, g.move_set);
  EXPECT_EQ(back.slip_prob, g.slip_prob);
  EXPECT_EQ(io::grid_from_json(io::json::parse(R"({"width":3,"height":2,"goal":null})")).goal,
            std::nullopt);
  EXPECT_THROW(io::grid_from_json(io::json::parse(R"({"width":3,"height":2,"goal":[5,5]})")),
               ParseError);
  EXPECT_EQ(io::load_grid("figure2a").width, 3);
}

TEST(DatasetJsonl, RoundTripThroughFiles) {
  const GridSpec grid = preset("figure2a");
  TrajectoryDataset data =
      collect(build_mdp(grid, 0.99, kQuiet), random_behavior_policy(grid), 4, 10, 3);
  data.metadata.env_id = "figure2a";
  const std::string path = temp_path("data.jsonl").string();
  io::save_dataset(data, path);
  const TrajectoryDataset back = io::load_dataset(path);
  ASSERT_EQ(back.episodes.size(), 4u);
  EXPECT_EQ(back.episodes[2].states, data.episodes[2].states);
  EXPECT_EQ(back.episodes[2].next_states, data.episodes[2].next_states);
  EXPECT_EQ(back.metadata.env_id, "figure2a");
  EXPECT_EQ(back.metadata.seed, 3u);
  fs::remove(path);
  fs::remove(io::metadata_path(path));
}

TEST(DatasetJsonl, LineNumberedErrors) {
  const std::string ok = R"({"states":[0],"actions":[1],"next_states":[2]})";
  try {
    io::episodes_from_jsonl(ok + "\n\n{\"states\":[0]}\n", "d.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("d.jsonl:3"), std::string::npos);
  }
  try {
    io::episodes_from_jsonl(ok + "\n{not json\n", "d.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    io::episodes_from_jsonl(ok + "\n" + R"({"states":[0],"actions":[7],"next_states":[0]})",
                            "d.jsonl", 3, 4);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(io::episodes_from_jsonl(R"({"states":[0,1],"actions":[0],"next_states":[1]})", "x"),
               ParseError);
  EXPECT_THROW(io::episodes_from_jsonl("", "x"), ParseError);
}

TEST(ExpertJson, RoundTrip) {
  ExpertObservations obs;
  obs.states = {0, 4, 8};
  obs.trajectories = {{0, 4, 8}};
  const auto back = io::expert_from_json(io::expert_to_json(obs), "e");
  EXPECT_EQ(back.kind, ExpertObservations::Kind::FullTrajectories);
  EXPECT_EQ(back.trajectories, obs.trajectories);
  const auto ex = io::expert_from_json(
      io::json::parse(R"({"kind":"success_examples","states":[3]})"), "e");
  EXPECT_EQ(ex.kind, ExpertObservations::Kind::SuccessExamples);
  EXPECT_THROW(io::expert_from_json(io::json::parse(R"({"kind":"demos","states":[3]})"), "e"),
               ParseError);
}

TEST(SolutionJson, RoundTrip) {
  Rng rng(2);
  const TabularMdp mdp = random_mdp(rng, 3, 2, 0.9);
  const auto d_O = compute_occupancy(mdp, random_policy(rng, 3, 2));
  const auto sol = solve_closed_form_chi2(mdp, d_O, RewardVector::zeros(3));
  const auto back = io::solution_from_json(io::json::parse(io::solution_to_json(sol).dump()), "s");
  EXPECT_EQ(back.v_star, sol.v_star);
  EXPECT_EQ(back.xi_star, sol.xi_star);
  EXPECT_EQ(back.policy.probs(), sol.policy.probs());
  EXPECT_EQ(back.diagnostics, sol.diagnostics);
}

TEST(Files, MissingFileIsIoError) {
  EXPECT_THROW(io::read_file("/nonexistent/dir/file.json"), IoError);
  EXPECT_THROW(io::write_file("/nonexistent/dir/file.json", "x"), IoError);
  EXPECT_THROW(io::parse_json("{", "bad.json"), ParseError);
}

}  // namespace
}  // namespace smodice
