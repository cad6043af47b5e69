// End-to-end checks of the command-line driver: exit codes, artifact layout,
// and byte-level determinism of metrics files. Takes the CLI binary path as
// argv[1] and shells out to it.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  std::cout << (ok ? "[ok]   " : "[FAIL] ") << what << "\n";
  if (!ok) ++failures;
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// small, fast configuration shared by every pipeline call
const char* kTinyOverrides =
    " -s corpus.per_kind=10 -s corpus.image_size=16"
    " -s pretrain.epochs=2 -s pretrain.crop=16 -s pretrain.batch_size=4"
    " -s unlearn.crop=16 -s unlearn.batch_size=4 -s unlearn.lr=0.004";

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <path-to-cli>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path root = fs::temp_directory_path() / ("uir-cli-test-" + std::to_string(getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string r = root.string();

  check(run(cli + " --help") == 0, "--help exits 0");
  check(run(cli + " gen-corpus --help") == 0, "subcommand help exits 0");
  check(run(cli + " frobnicate") == 2, "unknown subcommand exits 2");
  check(run(cli + " unlearn") == 2, "missing required --forget exits 2");

  // full tiny pipeline
  check(run(cli + " gen-corpus -o " + r + "/corpus" + kTinyOverrides) == 0, "gen-corpus runs");
  check(fs::exists(r + "/corpus/corpus"), "corpus archive exists");
  check(fs::exists(r + "/corpus/config"), "corpus config exists");

  check(run(cli + " pretrain --corpus " + r + "/corpus/corpus -o " + r + "/pre" + kTinyOverrides) == 0,
        "pretrain runs");
  check(fs::exists(r + "/pre/ckpt-before"), "pretrain checkpoint exists");
  check(fs::exists(r + "/pre/metrics"), "pretrain metrics exist");

  check(run(cli + " unlearn --corpus " + r + "/corpus/corpus --ckpt " + r + "/pre/ckpt-before" +
            " --forget haze -o " + r + "/unl" + kTinyOverrides) == 0,
        "unlearn runs");
  check(fs::exists(r + "/unl/ckpt-after"), "unlearn checkpoint exists");
  check(fs::exists(r + "/unl/metrics"), "unlearn metrics exist");
  check(fs::exists(r + "/unl/report.txt"), "unlearn report exists");

  check(run(cli + " eval --corpus " + r + "/corpus/corpus --ckpt " + r + "/unl/ckpt-after -o " +
            r + "/eval" + kTinyOverrides) == 0,
        "eval runs");

  check(run(cli + " retrain --corpus " + r + "/corpus/corpus --forget haze -o " + r + "/ret" +
            kTinyOverrides) == 0,
        "retrain runs");
  check(fs::exists(r + "/ret/ckpt-retrain"), "retrain checkpoint exists");

  check(run(cli + " report --run " + r + "/unl") == 0, "report regenerates the table");

  // determinism: identical command + seed gives byte-identical metrics
  const std::string common = " --corpus " + r + "/corpus/corpus -o ";
  check(run(cli + " pretrain" + common + r + "/pre2" + kTinyOverrides) == 0, "second pretrain runs");
  check(slurp(r + "/pre/metrics") == slurp(r + "/pre2/metrics"),
        "pretrain metrics are byte-identical across runs");
  check(run(cli + " unlearn --ckpt " + r + "/pre/ckpt-before --forget haze" + common + r + "/unl2" +
            kTinyOverrides) == 0,
        "second unlearn runs");
  check(slurp(r + "/unl/metrics") == slurp(r + "/unl2/metrics"),
        "unlearn metrics are byte-identical across runs");

  // seeds flow through: a different master seed changes the metrics
  check(run(cli + " pretrain" + common + r + "/pre3 --seed 99" + kTinyOverrides) == 0,
        "seeded pretrain runs");
  check(slurp(r + "/pre/metrics") != slurp(r + "/pre3/metrics"),
        "a different master seed changes the metrics");

  // images flag produces PNG triplets
  check(run(cli + " eval --corpus " + r + "/corpus/corpus --ckpt " + r + "/pre/ckpt-before -o " +
            r + "/evimg --images" + kTinyOverrides) == 0,
        "eval --images runs");
  check(fs::exists(r + "/evimg/images/haze-0-degraded.png") &&
            fs::exists(r + "/evimg/images/haze-0-restored.png") &&
            fs::exists(r + "/evimg/images/haze-0-clean.png"),
        "PNG triplets exist");

  // error taxonomy
  check(run(cli + " pretrain --corpus " + r + "/corpus/missing -o " + r + "/x" + kTinyOverrides) == 4,
        "missing corpus exits 4 (io error)");
  check(run(cli + " gen-corpus -o " + r + "/x -s corpus.does_not_exist=3") == 2,
        "unknown override key exits 2");
  check(run(cli + " gen-corpus -o " + r + "/x -s corpus.per_kind=0") == 2,
        "invalid config value exits 2");
  check(run(cli + " unlearn --corpus " + r + "/corpus/corpus --ckpt " + r + "/pre/ckpt-before" +
            " --forget fog -o " + r + "/x") == 2,
        "unknown degradation kind exits 2");
  check(run(cli + " unlearn --corpus " + r + "/corpus/corpus --ckpt " + r + "/pre/ckpt-before" +
            " --forget haze -s unlearn.enable_ins=false -s unlearn.enable_adv=false -o " + r + "/x") == 2,
        "disabling both losses exits 2");

  {
    // corrupted checkpoint exits 4
    std::string bytes = slurp(r + "/pre/ckpt-before");
    bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x11);
    std::ofstream f(r + "/pre/ckpt-corrupt", std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.close();
    check(run(cli + " eval --corpus " + r + "/corpus/corpus --ckpt " + r + "/pre/ckpt-corrupt -o " +
              r + "/x") == 4,
          "corrupted checkpoint exits 4");
  }

  // config file path: write a config and use it
  {
    std::ofstream f(r + "/cfg.json");
    f << "{\"corpus\": {\"per_kind\": 8, \"image_size\": 16}}\n";
    f.close();
    check(run(cli + " gen-corpus -c " + r + "/cfg.json -o " + r + "/c2" + kTinyOverrides) == 0,
          "config file accepted");
    std::ofstream g(r + "/bad.json");
    g << "{\"corpus\": {\"sigma\": 1}}\n";
    g.close();
    check(run(cli + " gen-corpus -c " + r + "/bad.json -o " + r + "/c3") == 2,
          "unknown config-file key exits 2");
  }

  fs::remove_all(root);
  if (failures) {
    std::cout << failures << " check(s) failed\n";
    return 1;
  }
  std::cout << "all cli checks passed\n";
  return 0;
}
