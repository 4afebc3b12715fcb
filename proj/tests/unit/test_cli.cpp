#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string(CFMIMO_CFSIM_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cfmimo_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

const std::string kTiny = std::string(CFMIMO_CONFIG_DIR) + "/tiny.cfg";

}  // namespace

TEST_CASE("sweep output is byte-identical across runs") {
  const fs::path a = scratch("a.csv"), b = scratch("b.csv");
  REQUIRE(run("sweep -q --config " + kTiny + " --trials 2 --out " + a.string()) == 0);
  REQUIRE(run("sweep -q --config " + kTiny + " --trials 2 --threads 2 --out " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).rfind("mode,scheduler,snr_db,mean_rate,std_rate,trials\n", 0) == 0);
  CHECK(slurp(a.string() + ".meta").find("master_seed=7\n") != std::string::npos);
}

TEST_CASE("compare, complexity and topology subcommands") {
  const fs::path cmp = scratch("cmp.csv"), tr = scratch("trace.csv"), cost = scratch("cost.csv"),
                 table = scratch("table.csv"), topo = scratch("topo.csv"), chan = scratch("chan.csv");
  CHECK(run("compare --config " + kTiny + " --trials 1 --snr 10 --out " + cmp.string() + " --trace-out " +
            tr.string()) == 0);
  CHECK(slurp(cmp).rfind("scheduler,mode,snr_db,mean_rate,std_rate,trials\n", 0) == 0);
  CHECK(slurp(tr).rfind("mode,trial,cluster,stage,users,rate,excluded,new\n", 0) == 0);
  CHECK(run("complexity-report --aps 16,64 --out " + cost.string() + " --table-out " + table.string()) == 0);
  const std::string c = slurp(cost);
  CHECK(std::count(c.begin(), c.end(), '\n') == 3);
  CHECK(slurp(table).find("cesg,70728,") != std::string::npos);
  CHECK(run("dump-topology --config " + kTiny + " --trial 2 --out " + topo.string() + " --channel-out " +
            chan.string()) == 0);
  const std::string t = slurp(topo);
  CHECK(std::count(t.begin(), t.end(), '\n') == 1 + 16 + 16);
  CHECK(slurp(chan).rfind("ap,user,beta,g_re,g_im\n", 0) == 0);
}

TEST_CASE("errors give a non-zero exit status") {
  CHECK(run("") != 0);
  CHECK(run("sweep --config /nonexistent.cfg") != 0);
  CHECK(run("sweep --config " + kTiny + " --out /nonexistent/dir/x.csv") != 0);
  CHECK(run("complexity-report --aps 0") != 0);
  const fs::path bad = scratch("bad.cfg");
  std::ofstream(bad) << "M = 4\nn_total = 9\n";
  CHECK(run("sweep -q --config " + bad.string()) != 0);
}
