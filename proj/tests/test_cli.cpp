#include <gtest/gtest.h>

#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "cli_app.hpp"
#include "test_util.hpp"

#include <httplib.h>

using namespace facepref;
using nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Output buffer safe to read while another thread writes.
class LockedBuf : public std::streambuf {
 public:
  std::string str() {
    std::lock_guard lock(mutex_);
    return text_;
  }

 protected:
  int overflow(int c) override {
    std::lock_guard lock(mutex_);
    if (c != traits_type::eof()) text_.push_back(static_cast<char>(c));
    return c;
  }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    std::lock_guard lock(mutex_);
    text_.append(s, static_cast<std::size_t>(n));
    return n;
  }

 private:
  std::mutex mutex_;
  std::string text_;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = (dir_ / "data.csv").string();
    const CliResult r = invoke({"synth", "--out", data_, "--n", "400", "--dim", "6", "--bayes-accuracy", "0.8", "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  testutil::TempDir dir_;
  std::string data_;
};

}  // namespace

TEST_F(CliTest, SynthIsDeterministicAndCalibrated) {
  const CliResult r = invoke({"synth", "--out", (dir_ / "again.csv").string(), "--n", "400", "--dim", "6", "--bayes-accuracy",
                     "0.8", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "again.csv"), slurp(data_));
  std::smatch m;
  ASSERT_TRUE(std::regex_search(r.out, m, std::regex("bayes_accuracy=([0-9.e-]+) ")));
  EXPECT_NEAR(std::stod(m[1]), 0.8, 1e-12);
  EXPECT_EQ(load_dataset(data_).size(), 400u);

  EXPECT_NE(invoke({"synth", "--out", (dir_ / "x.csv").string(), "--separation", "1", "--bayes-accuracy", "0.8"}).code, 0);
  EXPECT_NE(invoke({"synth"}).code, 0);
}

TEST_F(CliTest, IngestConvertsFormats) {
  const std::string jsonl = (dir_ / "data.jsonl").string();
  const CliResult r = invoke({"ingest", "--data", data_, "--out", jsonl});
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset a = load_dataset(jsonl), b = load_dataset(data_);
  ASSERT_EQ(a.size(), 400u);
  EXPECT_TRUE(std::equal(a.profiles().begin(), a.profiles().end(), b.profiles().begin(), b.profiles().end()));
  EXPECT_NE(r.out.find("profiles=400 dim=6"), std::string::npos);
}

TEST_F(CliTest, FeaturesMatchCore) {
  const CliResult r = invoke({"features", "--data", data_});
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset d = load_dataset(data_);
  const FeatureMatrix m = build_matrix(filter_reviewable(d, false), FeatureMode::avg);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "id,label,x0,x1,x2,x3,x4,x5");
  for (std::size_t i = 0; i < m.size(); ++i) {
    ASSERT_TRUE(std::getline(in, line));
    const auto fields = detail::split_fields(line, ',');
    ASSERT_EQ(fields.size(), 8u);
    EXPECT_EQ(fields[0], m.profile_ids[i]);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(parse_double(fields[k + 2]), m.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
  }
  const CliResult concat = invoke({"features", "--data", data_, "--features", "concat", "--max-images", "2"});
  ASSERT_EQ(concat.code, 0);
  EXPECT_NE(concat.err.find("warning:"), std::string::npos);  // some profiles have more than two faces
}

TEST_F(CliTest, TrainThenEvaluate) {
  const std::string model_path = (dir_ / "model.json").string();
  CliResult r = invoke({"train", "--model", "svm_rbf", "--data", data_, "--out", model_path, "--C", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Model model = load_model_file(model_path);
  EXPECT_EQ(model.family, ModelFamily::svm_rbf);
  EXPECT_EQ(std::get<SvmOptions>(model.hyperparams).C, 2.0);
  EXPECT_NE(r.out.find("train: accuracy=" + format_double(model.train_meta.training_accuracy)), std::string::npos);

  const std::string roc = (dir_ / "roc.csv").string(), report = (dir_ / "report.json").string();
  r = invoke({"eval", "--model-file", model_path, "--data", data_, "--roc-out", roc, "--report-out", report});
  ASSERT_EQ(r.code, 0) << r.err;
  const FeatureMatrix m = build_matrix(filter_reviewable(load_dataset(data_), false), FeatureMode::avg);
  const EvaluationReport parsed = parse_report(slurp(report));
  EXPECT_EQ(metrics_json(*parsed.metrics), metrics_json(evaluate_model(model, m)));
  const RocCurve expected = roc_auc(predict_scores(model, m), m.labels);
  EXPECT_EQ(parse_roc_csv(slurp(roc)).points, expected.points);
  EXPECT_NE(r.out.find("auc=" + format_double(expected.auc)), std::string::npos);
}

TEST_F(CliTest, EvalSplitModeIsDeterministic) {
  const CliResult a = invoke({"eval", "--data", data_, "--model", "logistic", "--seed", "9"});
  const CliResult b = invoke({"eval", "--data", data_, "--model", "logistic", "--seed", "9"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("n=20\n"), std::string::npos);  // 400 - floor(0.95 * 400)
}

TEST_F(CliTest, CurveMatchesLibrary) {
  const std::string json_out = (dir_ / "curve.json").string();
  const CliResult r = invoke({"curve", "--data", data_, "--models", "logistic,nn1", "--sizes", "10,40", "--repeats", "2",
                     "--seed", "4", "--epochs", "5", "--json-out", json_out});
  ASSERT_EQ(r.code, 0) << r.err;
  const FeatureMatrix m = build_matrix(filter_reviewable(load_dataset(data_), false), FeatureMode::avg);
  cli::ModelFlags flags;
  flags.epochs = 5;
  const std::vector<ModelSpec> specs{flags.spec("logistic", 4), flags.spec("nn1", 4)};
  const std::vector<std::size_t> sizes{10, 40};
  const auto rows = learning_curve(m, sizes, specs, 4, 2);
  EXPECT_EQ(r.out, learning_curve_csv(rows));
  EXPECT_EQ(json::parse(slurp(json_out)), learning_curve_json(rows));
  EXPECT_NE(invoke({"curve", "--data", data_, "--sizes", "10", "--fractions", "0.5"}).code, 0);
}

TEST_F(CliTest, PdfStudy) {
  const std::vector<std::string> args{"pdf-study", "--data", data_, "--n-train", "10,40", "--repeats", "12",
                                      "--baseline-repeats", "30", "--seed", "2"};
  const CliResult a = invoke(args);
  ASSERT_EQ(a.code, 0) << a.err;
  auto threaded = args;
  threaded.insert(threaded.end(), {"--threads", "3"});
  EXPECT_EQ(invoke(threaded).out, a.out);
  const EvaluationReport r = parse_report(a.out);
  ASSERT_EQ(r.studies.size(), 2u);
  ASSERT_EQ(r.baselines.size(), 2u);
  EXPECT_EQ(r.studies[0].samples.size(), 12u);
  EXPECT_EQ(r.baselines[1].samples.size(), 30u);
  EXPECT_EQ(r.baselines[1].n_val, r.studies[1].n_val);
  EXPECT_NE(a.err.find("n_train=40"), std::string::npos);
  auto bad = args;
  bad.insert(bad.end(), {"--baseline", "dice"});
  EXPECT_EQ(invoke(bad).code, 1);
}

TEST_F(CliTest, ServeUntilStopped) {
  testutil::TempDir data_dir;
  ASSERT_EQ(invoke({"ingest", "--data", data_, "--out", (data_dir / "dataset.jsonl").string()}).code, 0);
  std::vector<Profile> profiles;
  {
    const Dataset d = load_dataset(data_dir / "dataset.jsonl");
    profiles.assign(d.profiles().begin(), d.profiles().end());
    profiles[0].label = Label::unreviewed;
    save_dataset(Dataset(d.dim(), profiles), data_dir / "dataset.jsonl");
  }

  cli::stop_flag()->store(0);
  LockedBuf buf;
  std::ostream out(&buf);
  std::ostringstream err;
  int code = -1;
  std::thread server([&] {
    code = cli::run_cli({"serve", "--data-dir", data_dir.path().string(), "--port", "0"}, out, err);
  });
  std::smatch m;
  std::string text;
  for (int i = 0; i < 500 && !std::regex_search(text, m, std::regex(":([0-9]+)\n")); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    text = buf.str();
  }
  ASSERT_TRUE(std::regex_search(text, m, std::regex(":([0-9]+)\n"))) << text;
  httplib::Client client("127.0.0.1", std::stoi(m[1]));
  auto res = client.Post("/api/profiles/" + profiles[0].id + "/decision", R"({"decision":"like"})", "application/json");
  EXPECT_EQ(res ? res->status : -1, 200);
  cli::stop_flag()->store(1);
  server.join();
  cli::stop_flag()->store(0);
  EXPECT_EQ(code, 0) << err.str();
  EXPECT_EQ(load_dataset(data_dir / "dataset.jsonl").at(profiles[0].id).label, Label::like);
  EXPECT_FALSE(std::filesystem::exists(data_dir / "decisions.log"));
}

TEST(Cli, Errors) {
  CliResult r = invoke({"train", "--data", "/nonexistent.csv", "--out", "/tmp/x.json"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
  EXPECT_NE(invoke({}).code, 0);
  EXPECT_NE(invoke({"frobnicate"}).code, 0);
  EXPECT_NE(invoke({"train", "--data"}).code, 0);
  ::unsetenv("FACEPREF_DATA_DIR");
  r = invoke({"serve"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("FACEPREF_DATA_DIR"), std::string::npos);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}
