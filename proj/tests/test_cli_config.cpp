#include "htype/app/output.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace htype;
using namespace htype::app;

namespace {

// Message of the ConfigError raised by parsing `text` ("" if it parses).
std::string config_error(const std::string& text)
{
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const std::string kAtomVerify =
    R"({"task":"verify","group":{"kind":"heisenberg","n":1},"p":3,"alpha":0.5,)"
    R"("source":{"type":"atoms","atoms":[{"weight":1,"point":[0,0,0]},{"weight":2,"point":[0.5,0.5,0.5]}]},)"
    R"("samples":{"box":{"lower":[-1,-1,-1],"upper":[1,1,1]},"counts":[2,2,3]}})";

}  // namespace

TEST(ParseConfig, MinimalGroupInfo)
{
  const TaskConfig c = parse_config_text(R"({"group":{"kind":"heisenberg","n":1},"task":"group_info"})");
  EXPECT_EQ(c.task, Task::group_info);
  EXPECT_EQ(c.group, GroupSpec::heisenberg(1));
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.schema_version, kSchemaVersion);
  EXPECT_GE(c.threads, 1);
  EXPECT_EQ(c.quadrature.gauss_order, QuadratureConfig{}.gauss_order);
}

TEST(ParseConfig, CustomGroupDefectIsNamed)
{
  const std::string msg = config_error(
      R"({"task":"group_info","group":{"kind":"custom","b":[)"
      R"([[0,1,0,0],[-1,0,0,0],[0,0,0,1],[0,0,-1,0]],)"
      R"([[0,1,0,0],[-1,0,0,0],[0,0,0,1],[0,0,-1,0]]]}})");
  EXPECT_NE(msg.find("group.b"), std::string::npos) << msg;
  EXPECT_NE(msg.find("anticommutation"), std::string::npos) << msg;
  EXPECT_EQ(config_error(R"({"task":"group_info","group":{"kind":"custom","b":[[[0,1],[-1,0]]]}})"), "");
}

TEST(ParseConfig, VerifyRejectsAlphaBeyondTheorem)
{
  std::string text = kAtomVerify;
  text.replace(text.find("\"alpha\":0.5"), 11, "\"alpha\":0.6");
  const std::string msg = config_error(text);
  EXPECT_NE(msg.find("'alpha'"), std::string::npos) << msg;
  EXPECT_EQ(config_error(kAtomVerify), "");

  // The same pair is allowed in an exploratory scan.
  std::string explore = kAtomVerify;
  explore.replace(explore.find("\"task\":\"verify\""), 15, "\"task\":\"explore_threshold\"");
  explore.replace(explore.find("\"alpha\":0.5"), 11, "\"alpha_values\":[0.5,0.6]");
  EXPECT_EQ(config_error(explore), "");
}

TEST(ParseConfig, ErrorsNameTheField)
{
  const std::string h1 = R"("group":{"kind":"heisenberg","n":1})";
  struct Case { std::string text, field; };
  for (const Case& c : std::vector<Case>{
           {"{\"task\": ", "JSON"},
           {"[]", "<root>"},
           {"{" + h1 + "}", "'task'"},
           {R"({"task":"nope",)" + h1 + "}", "'task'"},
           {R"({"task":"group_info"})", "'group'"},
           {R"({"task":"group_info","group":{"kind":"heisenberg","n":0}})", "'group.n'"},
           {R"({"task":"group_info","group":{"kind":"lie"}})", "'group.kind'"},
           {R"({"task":"group_info","bogus":1,)" + h1 + "}", "'bogus'"},
           {R"({"task":"group_info","schema_version":2,)" + h1 + "}", "'schema_version'"},
           {R"({"task":"group_info","seed":-1,)" + h1 + "}", "'seed'"},
           {R"({"task":"group_info","threads":0,)" + h1 + "}", "'threads'"},
           {R"({"task":"group_info","quadrature":{"rel_tol":-1},)" + h1 + "}", "'quadrature'"},
           {R"({"task":"group_info","quadrature":{"max_depth":2},)" + h1 + "}", "'quadrature'"},
           {R"({"task":"verify","p":3,"alpha":0.5,)" + h1 + "}", "'source'"},
           {R"({"task":"verify","p":2,"alpha":0.5,)" + h1 + "}", "'p'"},
           {R"({"task":"verify","p":3,"alpha":0.5,"source":{"type":"atoms","atoms":[{"point":[0,0]}]},)" + h1 + "}",
            "'source.atoms[0].point'"},
           {R"({"task":"verify","p":3,"alpha":0.5,"source":{"type":"atoms","atoms":[{"weight":-1,"point":[0,0,0]}]},)" +
                h1 + "}",
            "'source.atoms[0].weight'"},
           {R"({"task":"verify","p":3,"alpha":0.5,"source":{"type":"density","bumps":[{"center":[0,0,0],"radius":0}]},)" +
                h1 + "}",
            "'source.bumps[0].radius'"},
           {R"({"task":"verify","p":3,"alpha":0.5,"source":{"type":"atoms","atoms":[{"point":[1,0,0]}]},)" + h1 + "}",
            "'samples'"},
           {R"({"task":"verify","p":3,"alpha":0.5,"source":{"type":"atoms","atoms":[{"point":[1,0,0]}]},)"
            R"("samples":{"box":{"lower":[0,0,0],"upper":[1,1,1]},"counts":[2,2]},)" + h1 + "}",
            "'samples.counts'"},
           {R"({"task":"lemmas","suites":["algebra","nope"],)" + h1 + "}", "'suites'"},
           {R"({"task":"newtonian","source":{"type":"atoms","atoms":[{"point":[1,0,0]}]},"samples":{"points":[[0,0,0]]},)" +
                h1 + "}",
            "'source'"},
           {R"({"task":"riesz","source":{"type":"atoms","atoms":[{"point":[1,0,0]}]},"samples":{"points":[[0,0,0]]},)" +
                h1 + "}",
            "'alpha'"},
       }) {
    const std::string msg = config_error(c.text);
    EXPECT_NE(msg.find(c.field), std::string::npos) << c.text << " -> " << msg;
  }
}

TEST(ParseConfig, InfinityAndLogCases)
{
  std::string inf = kAtomVerify;
  inf.replace(inf.find("\"p\":3,\"alpha\":0.5"), 17, "\"p\":\"inf\",\"alpha\":-1");
  const TaskConfig c = parse_config_text(inf);
  EXPECT_TRUE(std::isinf(*c.p));
  std::string log = kAtomVerify;
  log.replace(log.find("\"p\":3,\"alpha\":0.5"), 17, "\"p\":4,\"alpha\":0");
  EXPECT_EQ(config_error(log), "");
  log.replace(log.find("\"alpha\":0"), 9, "\"alpha\":0.1");
  EXPECT_NE(config_error(log).find("'alpha'"), std::string::npos);
}

TEST(ParseConfig, DensityCostGuard)
{
  const std::string text =
      R"({"task":"verify","group":{"kind":"quaternionic","n":1},"p":4,"alpha":2,)"
      R"("source":{"type":"density","bumps":[{"center":[0,0,0,0,0,0,0],"radius":0.5}]},)"
      R"("samples":{"points":[[1,0,0,0,0,0,0]]}})";
  EXPECT_NE(config_error(text).find("'source'"), std::string::npos);
}

TEST(ExpandSamples, GridOrderAndEndpoints)
{
  const TaskConfig c = parse_config_text(kAtomVerify);
  const std::vector<GroupPoint> pts = expand_samples(c.group, c.samples);
  ASSERT_EQ(pts.size(), 12u);
  EXPECT_EQ(pts[0], (GroupPoint{vec({-1, -1}), vec({-1})}));
  EXPECT_EQ(pts[1], (GroupPoint{vec({-1, -1}), vec({0})}));
  EXPECT_EQ(pts[11], (GroupPoint{vec({1, 1}), vec({1})}));
}

TEST(ExpandSamples, RandomIsSeeded)
{
  const std::string text =
      R"({"task":"verify","group":{"kind":"heisenberg","n":1},"p":3,"alpha":0.5,)"
      R"("source":{"type":"atoms","atoms":[{"point":[5,5,5]}]},"samples":{"random":{"count":4,"scale":0.5,"seed":3}}})";
  const TaskConfig c = parse_config_text(text);
  const auto a = expand_samples(c.group, c.samples);
  const auto b = expand_samples(c.group, c.samples);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a, b);
  for (const GroupPoint& g : a) EXPECT_LE(g.z.cwiseAbs().maxCoeff(), 0.5);
}

TEST(RunTask, GroupInfoHasNoNumerics)
{
  const RunReport r = run_task(parse_config_text(R"({"group":{"kind":"quaternionic","n":1},"task":"group_info"})"));
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_TRUE(r.points.empty());
  ASSERT_EQ(r.records.size(), 4u);
  EXPECT_EQ(r.records[2].name, "group.Q");
  EXPECT_EQ(r.records[2].value, 10.0);
}

TEST(RunTask, LemmasPassOnH1)
{
  TaskConfig c = parse_config_text(R"({"group":{"kind":"heisenberg","n":1},"task":"lemmas","count":20})");
  const RunReport r = run_task(c);
  EXPECT_TRUE(r.pass());
  for (const Record& rec : r.records) {
    EXPECT_TRUE(rec.pass) << rec.name << " " << rec.value;
    EXPECT_GT(rec.tolerance, 0.0) << rec.name;
  }
}

TEST(RunTask, VerifyAtomsPassesWithVerdicts)
{
  TaskConfig c = parse_config_text(kAtomVerify);
  c.threads = 2;
  const RunReport r = run_task(c);
  EXPECT_EQ(r.exit_code(), 0);
  ASSERT_EQ(r.points.size(), 12u);
  for (const json& p : r.points) EXPECT_EQ(p.at("verdict"), "pass");
  ASSERT_EQ(r.csv_rows.size(), 12u);
  EXPECT_EQ(r.csv_header.size(), 10u);
}

TEST(RunTask, SampleOnAtomIsAConfigError)
{
  std::string text = kAtomVerify;
  text.replace(text.find("[0.5,0.5,0.5]"), 13, "[1,1,1]");
  const TaskConfig c = parse_config_text(text);
  EXPECT_THROW(run_task(c), ConfigError);
}

TEST(RunTask, ExploreRecordsAreInformational)
{
  std::string text = kAtomVerify;
  text.replace(text.find("\"task\":\"verify\""), 15, "\"task\":\"explore_threshold\"");
  text.replace(text.find("\"alpha\":0.5"), 11, "\"alpha_values\":[0.5,3.0]");
  const RunReport r = run_task(parse_config_text(text));
  EXPECT_TRUE(r.exploratory);
  EXPECT_EQ(r.exit_code(), 0);
  for (const Record& rec : r.records) EXPECT_TRUE(rec.informational) << rec.name;
}

TEST(RunTask, StarvedQuadratureIsANumericalFailure)
{
  const std::string text =
      R"({"task":"verify","group":{"kind":"heisenberg","n":1},"p":3,"alpha":0.5,)"
      R"("source":{"type":"density","bumps":[{"center":[0,0,0],"radius":0.5}]},"samples":{"points":[[0.1,0,0]]},)"
      R"("quadrature":{"rel_tol":1e-12,"abs_tol":1e-300,"max_depth":1,"singular_refine_depth":0}})";
  const RunReport r = run_task(parse_config_text(text));
  EXPECT_TRUE(r.numerical_failure);
  EXPECT_EQ(r.exit_code(), 3);
}

TEST(WriteOutputs, DeterministicAndThreadIndependent)
{
  TaskConfig c = parse_config_text(kAtomVerify);
  c.threads = 1;
  const std::string a = report_to_json(run_task(c)).dump(2) + report_to_csv(run_task(c));
  c.threads = 3;
  const std::string b = report_to_json(run_task(c)).dump(2) + report_to_csv(run_task(c));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find("threads"), std::string::npos);
}

TEST(WriteOutputs, ReportShape)
{
  const RunReport r = run_task(parse_config_text(kAtomVerify));
  const json j = report_to_json(r);
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(j.at("tool").at("version"), kToolVersion);
  EXPECT_EQ(j.at("config").at("task"), "verify");
  EXPECT_EQ(j.at("config").at("quadrature").at("gauss_order"), QuadratureConfig{}.gauss_order);
  EXPECT_TRUE(j.at("pass").get<bool>());
  for (const json& rec : j.at("records")) {
    for (const char* key : {"name", "value", "tolerance", "pass", "informational"}) EXPECT_TRUE(rec.contains(key));
  }
  const std::string csv = report_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "z1,z2,t1,F,gradnorm,subLap,infLap,pLap,verdict,errbound");
  EXPECT_THROW(write_outputs(run_task(parse_config_text(R"({"group":{"kind":"heisenberg","n":1},"task":"group_info"})")),
                             "/dev/null", "/dev/null"),
               ConfigError);
}
