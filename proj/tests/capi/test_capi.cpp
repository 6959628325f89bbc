#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "edgeguard/edgeguard.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("edgeguard_capi_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void collect(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }

eg_config* make(std::initializer_list<std::pair<const char*, std::string>> kv) {
  eg_config* c = nullptr;
  REQUIRE(eg_config_new(&c) == EG_OK);
  for (const auto& [k, v] : kv) REQUIRE(eg_config_set(c, k, v.c_str()) == EG_OK);
  return c;
}

}  // namespace

TEST_CASE("null arguments return invalid argument with a message") {
  CHECK(eg_config_new(nullptr) == EG_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(eg_last_error()) > 0);
  CHECK(eg_run(nullptr, nullptr, nullptr, nullptr) == EG_ERR_INVALID_ARGUMENT);
  eg_model* m = nullptr;
  CHECK(eg_model_load(nullptr, &m) == EG_ERR_INVALID_ARGUMENT);
  CHECK(std::string(eg_status_name(EG_ERR_IO)) == "io error");
}

TEST_CASE("commands and keys are enumerable") {
  CHECK(eg_command_count() == 7);
  CHECK(std::string(eg_command_name(0)) == "generate");
  CHECK(eg_command_name(99) == nullptr);
  size_t n = 0;
  REQUIRE(eg_command_key_count("sweep", &n) == EG_OK);
  CHECK(n > 5);
  const char *name, *def, *help;
  int required = -1;
  REQUIRE(eg_command_key("sweep", 0, &name, &def, &help, &required) == EG_OK);
  CHECK(std::string(name) == "config");
  CHECK(required == 0);
  CHECK(eg_command_key("sweep", n, &name, &def, &help, &required) == EG_ERR_RANGE);
  CHECK(eg_command_key_count("bogus", &n) == EG_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config values round trip") {
  eg_config* c = make({{"n", "12"}});
  char buf[8];
  REQUIRE(eg_config_get(c, "n", buf, sizeof(buf)) == EG_OK);
  CHECK(std::string(buf) == "12");
  CHECK(eg_config_get(c, "n", buf, 2) == EG_ERR_RANGE);
  CHECK(eg_config_get(c, "x", buf, sizeof(buf)) == EG_ERR_INVALID_ARGUMENT);
  eg_config_free(c);
}

TEST_CASE("missing checkpoint is a validation error naming the flag") {
  eg_config* c = make({});
  CHECK(eg_run("sweep", c, nullptr, nullptr) == EG_ERR_INVALID_ARGUMENT);
  CHECK(std::string(eg_last_error()).find("--checkpoint") != std::string::npos);
  eg_config_free(c);
}

TEST_CASE("pipeline and detection through handles") {
  TempDir dir;
  const std::string data = (dir.path / "data").string();
  const std::string model = (dir.path / "model").string();
  const std::string calib = (dir.path / "calib").string();
  std::vector<std::string> lines;

  eg_config* g = make({{"seed", "2"}, {"n", "20"}, {"height", "16"}, {"width", "16"}, {"out", data}});
  REQUIRE(eg_run("generate", g, collect, &lines) == EG_OK);
  CHECK(eg_run("generate", g, nullptr, nullptr) == EG_ERR_INVALID_ARGUMENT);
  eg_config_free(g);
  CHECK(lines.size() == 3);

  eg_config* t = make({{"data", data}, {"out", model}, {"epochs", "1"}, {"lr", "0.1"}});
  REQUIRE(eg_run("train", t, nullptr, nullptr) == EG_OK);
  eg_config_free(t);
  eg_config* k = make({{"data", data}, {"checkpoint", model}, {"out", calib}});
  REQUIRE(eg_run("calibrate", k, nullptr, nullptr) == EG_OK);
  eg_config_free(k);

  eg_model* m = nullptr;
  eg_thresholds* th = nullptr;
  REQUIRE(eg_model_load(model.c_str(), &m) == EG_OK);
  REQUIRE(eg_thresholds_load((calib + "/thresholds.txt").c_str(), &th) == EG_OK);
  CHECK(eg_model_num_classes(m) == 5);
  double theta[3], gamma = -1, fpr = -1;
  REQUIRE(eg_thresholds_get(th, theta, &gamma, &fpr) == EG_OK);
  CHECK(fpr <= 0.05);

  std::string image;
  for (const auto& e : fs::directory_iterator(data)) {
    const std::string f = e.path().filename().string();
    if (f.rfind("test_", 0) == 0 && f.find("_image.egarr") != std::string::npos) image = e.path().string();
  }
  REQUIRE(!image.empty());
  eg_detection from_file{};
  REQUIRE(eg_detect_file(m, th, image.c_str(), &from_file) == EG_OK);
  CHECK((from_file.decision == 0 || from_file.decision == 1));
  CHECK(eg_detect_file(m, th, (dir.path / "none.egarr").c_str(), &from_file) == EG_ERR_IO);

  std::vector<float> flat(16 * 16 * 3, 0.5f);
  eg_detection d{};
  REQUIRE(eg_detect_image(m, th, flat.data(), 16, 16, &d) == EG_OK);
  CHECK(eg_detect_image(m, th, flat.data(), 0, 16, &d) == EG_ERR_SHAPE);

  eg_thresholds_free(th);
  eg_model_free(m);
}
