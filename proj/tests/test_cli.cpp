#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "efs/cli.hpp"
#include "efs/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using efs::cli::dispatch;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("efs_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& contents = "") const {
    const fs::path p = path_ / name;
    if (!contents.empty()) std::ofstream(p) << contents;
    return p.string();
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// quantity -> value from the analyze CSV
std::map<std::string, double> quantities(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::map<std::string, double> out;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    out[line.substr(0, a)] = std::stod(line.substr(a + 1, b - a - 1));
  }
  return out;
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(EFS_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("weights exact") {
  const Run r = run({"weights", "exact", "--k", "2", "--m", "4", "--p", "4"});
  CHECK(r.code == 0);
  CHECK(r.out == "j,weight\n1,1\n2,1\n3,0\n4,0\n");
  CHECK(r.err.empty());

  const Run third = run({"weights", "exact", "--k", "1", "--m", "3", "--p", "3"});
  CHECK(third.out == "j,weight\n1,1\n2,0\n3,0\n");

  const Run sub = run({"weights", "exact", "--k", "1", "--m", "2", "--p", "4"});
  CHECK(sub.out == "j,weight\n1,0.5\n2,0.33333333333333331\n3,0.16666666666666666\n4,0\n");
}

TEST_CASE("validation errors exit 2 with one diagnostic line") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"weights", "exact", "--k", "1", "--m", "0", "--p", "4"},
           {"weights", "exact", "--k", "1", "--m", "2", "--p", "4", "--bogus", "1"},
           {"weights", "exact", "--k", "1", "--m", "2"},
           {"weights", "exact", "--k", "x", "--m", "2", "--p", "4"},
           {"weights", "limit", "--d", "0", "--gamma", "1.5"},
           {"frobnicate"},
           {}}) {
    const Run r = run(args);
    CHECK(r.code == 2);
    CHECK(r.out.empty());
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
}

TEST_CASE("help exits 0") {
  const Run r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("simulate") != std::string::npos);
}

TEST_CASE("other weight subcommands") {
  SUBCASE("asymptotic") {
    const Run r = run({"weights", "asymptotic", "--k", "2", "--gamma", "0.5"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("j,weight\n", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 7);
    const Run j = run({"weights", "asymptotic", "--k", "2", "--gamma", "0.5", "--jmax", "3"});
    CHECK(std::count(j.out.begin(), j.out.end(), '\n') == 4);
  }
  SUBCASE("limit") {
    const Run r = run({"weights", "limit", "--d", "-1", "--gamma", "0.5"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("j,weight\n-1,", 0) == 0);
  }
  SUBCASE("mc honors the seed") {
    const std::vector<std::string> base{"weights", "mc", "--k", "2", "--m", "2", "--p", "5", "--reps", "500"};
    auto with = [&](std::vector<std::string> extra) {
      std::vector<std::string> a = base;
      a.insert(a.end(), extra.begin(), extra.end());
      return run(a);
    };
    const Run r0 = with({});
    CHECK(r0.code == 0);
    CHECK(r0.out.rfind("j,weight,stderr\n", 0) == 0);
    CHECK(with({"--seed", "0"}).out == r0.out);
    CHECK(with({"--seed", "7"}).out != r0.out);
    CHECK(with({"--seed", "7"}).out == with({"--seed", "7"}).out);
  }
}

TEST_CASE("fit") {
  TempDir tmp;
  // y = 2 x1 - x3 exactly, x2 unrelated
  std::ostringstream csv;
  csv << "y,x1,x2,x3\n";
  for (int i = 0; i < 20; ++i) {
    const double x1 = std::sin(i + 1.0), x2 = std::cos(3.0 * i), x3 = 0.1 * i - 1.0;
    csv << efs::format_double(2.0 * x1 - x3) << ',' << efs::format_double(x1) << ',' << efs::format_double(x2)
        << ',' << efs::format_double(x3) << '\n';
  }
  const std::string data = tmp.file("data.csv", csv.str());

  SUBCASE("fs") {
    const Run r = run({"fit", "fs", "--k", "2", "--data", data});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    auto sel = j.at("selected").get<std::vector<int>>();
    std::sort(sel.begin(), sel.end());
    CHECK(sel == std::vector<int>{1, 3});
    const auto coef = j.at("coef").get<std::vector<double>>();
    CHECK(coef[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(coef[1] == 0.0);
    CHECK(coef[2] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(j.at("train_mse").get<double>() < 1e-24);
  }
  SUBCASE("efs is seeded") {
    const Run a = run({"fit", "efs", "--k", "1", "--m", "1", "--B", "30", "--data", data, "--seed", "4"});
    REQUIRE(a.code == 0);
    CHECK(a.out == run({"fit", "efs", "--k", "1", "--m", "1", "--B", "30", "--data", data, "--seed", "4"}).out);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j.at("coef").size() == 3);
    CHECK(j.at("train_mse").get<double>() > 0.0);
  }
  SUBCASE("efs requires m") { CHECK(run({"fit", "efs", "--k", "1", "--data", data}).code == 2); }
  SUBCASE("missing data file exits 3") {
    CHECK(run({"fit", "fs", "--k", "1", "--data", (tmp.path() / "absent.csv").string()}).code == 3);
  }
  SUBCASE("malformed data exits 2") {
    CHECK(run({"fit", "fs", "--k", "1", "--data", tmp.file("bad.csv", "y,x\n1,2\n3\n")}).code == 2);
  }
}

TEST_CASE("analyze") {
  TempDir tmp;
  SUBCASE("gap") {
    const Run r = run({"analyze", "gap", "--config", tmp.file("gap.json", R"({"p": 30, "k": 3})")});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("quantity,value,stderr\n", 0) == 0);
    const auto q = quantities(r.out);
    CHECK(q.count("max_gap") == 1);
    CHECK(q.at("max_gap") >= q.at("bound"));
  }
  SUBCASE("majorization") {
    const Run r = run({"analyze", "majorization", "--config", tmp.file("maj.json", R"({"p": 8, "k": 3})")});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("quantity,value,stderr\n", 0) == 0);
  }
  SUBCASE("df") {
    const std::string cfg = tmp.file("df.json", R"({"p": 6, "k": 2, "m": 3, "replicates": 300, "seed": 2})");
    const Run r = run({"analyze", "df", "--config", cfg});
    REQUIRE(r.code == 0);
    const auto q = quantities(r.out);
    CHECK(q.count("df_fs") == 1);
    CHECK(q.count("df_efs_direct") == 1);
    CHECK(run({"analyze", "df", "--config", cfg}).out == r.out);
    CHECK(run({"analyze", "df", "--config", cfg, "--seed", "3"}).out != r.out);
  }
  SUBCASE("escape") {
    const Run r = run({"analyze", "escape", "--config",
                       tmp.file("esc.json", R"({"p": 12, "k": 5, "replicates": 40})")});
    REQUIRE(r.code == 0);
    CHECK(quantities(r.out).at("fs_first_pick") == 12.0);
  }
  SUBCASE("config errors") {
    CHECK(run({"analyze", "gap", "--config", tmp.file("u.json", R"({"q": 1})")}).code == 2);
    CHECK(run({"analyze", "gap", "--config", tmp.file("t.json", R"({"p": "ten"})")}).code == 2);
    CHECK(run({"analyze", "gap", "--config", (tmp.path() / "none.json").string()}).code == 3);
  }
}

TEST_CASE("simulate") {
  TempDir tmp;
  const std::string cfg = tmp.file(
      "sim.json", R"({"n": 60, "p": 8, "s": 3, "k_max": 4, "B": 4, "folds": 3, "replicates": 10, "seed": 1})");
  const std::string a = (tmp.path() / "a.csv").string();
  const std::string b = (tmp.path() / "b.csv").string();
  CHECK(run({"simulate", "--config", cfg, "--out", a}).code == 0);
  CHECK(run({"simulate", "--config", cfg, "--out", b}).code == 0);
  const std::string first = efs::read_file(a);
  CHECK(first == efs::read_file(b));
  CHECK(first.rfind("k,method,chosen_m,df,df_se,train_mse,train_mse_se\n", 0) == 0);
  CHECK(std::count(first.begin(), first.end(), '\n') == 9);

  const std::string c = (tmp.path() / "c.csv").string();
  CHECK(run({"simulate", "--config", cfg, "--out", c, "--seed", "2"}).code == 0);
  CHECK(efs::read_file(c) != first);

  SUBCASE("unwritable output exits 3 and leaves nothing behind") {
    const fs::path target = tmp.path() / "missing_dir" / "r.csv";
    CHECK(run({"simulate", "--config", cfg, "--out", target.string()}).code == 3);
    CHECK_FALSE(fs::exists(target));
  }
  SUBCASE("invalid config leaves no output") {
    const std::string bad = tmp.file("bad.json", R"({"n": 60, "p": 8, "k_max": 9})");
    const fs::path target = tmp.path() / "never.csv";
    CHECK(run({"simulate", "--config", bad, "--out", target.string()}).code == 2);
    CHECK_FALSE(fs::exists(target));
  }
  SUBCASE("--out is required") { CHECK(run({"simulate", "--config", cfg}).code == 2); }
}

TEST_CASE("binary exit codes") {
  TempDir tmp;
  CHECK(run_binary("weights exact --k 2 --m 4 --p 4") == 0);
  CHECK(run_binary("weights exact --k 1 --m 0 --p 4") == 2);
  CHECK(run_binary("weights exact --k 1 --m 1 --p 4 --nope") == 2);
  CHECK(run_binary("fit fs --k 1 --data " + (tmp.path() / "absent.csv").string()) == 3);
  CHECK(run_binary("weights exact --k 1 --m 2 --p 2 --out " + (tmp.path() / "w.csv").string()) == 0);
  CHECK(efs::read_file((tmp.path() / "w.csv").string()) == "j,weight\n1,1\n2,0\n");
}
