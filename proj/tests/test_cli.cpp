#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef FREECONV_CLI_PATH
#define FREECONV_CLI_PATH "freeconv"
#endif

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(FREECONV_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("density emits the fixed CSV header and a metadata block") {
    write_file("/tmp/fc_cli_a.json", R"({"kind":"atomic","atoms":[[2.0,1.0]]})");
    write_file("/tmp/fc_cli_b.json", R"({"kind":"atomic","atoms":[[1.0,0.5],[3.0,0.5]]})");
    CHECK(run("density --muA /tmp/fc_cli_a.json --muB /tmp/fc_cli_b.json --grid 1.5:6.5:64 --out /tmp/fc_cli_d.csv") == 0);
    std::ifstream in("/tmp/fc_cli_d.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "x,rho,re_m,im_m");
    const std::string meta = slurp("/tmp/fc_cli_d.csv.meta.json");
    CHECK(meta.find("\"e_plus\"") != std::string::npos);
    CHECK(meta.find("\"config_hash\"") != std::string::npos);
}

TEST_CASE("edges reports the dilation law") {
    CHECK(run("edges --muA /tmp/fc_cli_a.json --muB /tmp/fc_cli_b.json --out /tmp/fc_cli_e.json") == 0);
    const std::string text = slurp("/tmp/fc_cli_e.json");
    // delta_2 x two-atom: hard edges clamp to exactly 2 and 6
    CHECK(text.find("\"e_plus\": 6.0") != std::string::npos);
    CHECK(text.find("\"e_minus\": 2.0") != std::string::npos);
}

TEST_CASE("verify is byte-identical for a fixed seed") {
    CHECK(run("verify --preset two-atom --n 120 --trials 3 --seed 7 --out /tmp/fc_cli_v1.json") == 0);
    CHECK(run("verify --preset two-atom --n 120 --trials 3 --seed 7 --out /tmp/fc_cli_v2.json") == 0);
    CHECK(slurp("/tmp/fc_cli_v1.json") == slurp("/tmp/fc_cli_v2.json"));
    CHECK(slurp("/tmp/fc_cli_v1.json").find("pooled_ks") != std::string::npos);
}

TEST_CASE("subordinate writes solution records") {
    CHECK(run("subordinate --preset two-atom --grid 2.0:8.0:16 --eta 0.5 --out /tmp/fc_cli_s.json") == 0);
    const std::string text = slurp("/tmp/fc_cli_s.json");
    CHECK(text.find("\"omega_a\"") != std::string::npos);
    CHECK(text.find("\"residual\"") != std::string::npos);
    CHECK(text.find("\"iterations\"") != std::string::npos);
}

TEST_CASE("spiked-predict on the single-spike preset") {
    CHECK(run("spiked-predict --preset spiked-single --n 500 --out /tmp/fc_cli_p.json") == 0);
    const std::string text = slurp("/tmp/fc_cli_p.json");
    CHECK(text.find("\"supercritical\": true") != std::string::npos);
    CHECK(text.find("\"overlaps\"") != std::string::npos);
}

TEST_CASE("exit codes: 1 for config errors, 2 for numerical failures") {
    CHECK(run("density --muA /nonexistent.json --muB /tmp/fc_cli_b.json --out /tmp/x.csv") == 1);
    CHECK(run("bogus-subcommand") == 1);
    write_file("/tmp/fc_cli_bad.json", R"({"kind":"atomic","atoms":[[1.0,0.5],[3.0,0.6]]})");
    CHECK(run("edges --muA /tmp/fc_cli_bad.json --muB /tmp/fc_cli_b.json") == 1);
    // numerical failure: real-axis solve pinned on the convolution atom of a
    // point-mass pair forces the iterate onto the support
    write_file("/tmp/fc_cli_c.json", R"({"kind":"atomic","atoms":[[3.0,1.0]]})");
    CHECK(run("subordinate --muA /tmp/fc_cli_a.json --muB /tmp/fc_cli_c.json --grid 5.9999999:6.0000001:3 --eta 0 "
              "--out /tmp/fc_cli_f.json") == 2);
}
