#include "edgeguard/edgeguard.h"

#include <cstring>
#include <string>

#include "edgeguard/array_io.hpp"
#include "edgeguard/detector.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/pipeline.hpp"
#include "edgeguard/toynet.hpp"

struct eg_config {
  edgeguard::RunConfig config;
};

struct eg_model {
  edgeguard::ToyNet net;
};

struct eg_thresholds {
  edgeguard::ThresholdSet set;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
eg_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return EG_OK;
  } catch (const edgeguard::InvalidArgument& e) {
    g_last_error = e.what();
    return EG_ERR_INVALID_ARGUMENT;
  } catch (const edgeguard::FormatError& e) {
    g_last_error = e.what();
    return EG_ERR_FORMAT;
  } catch (const edgeguard::ShapeError& e) {
    g_last_error = e.what();
    return EG_ERR_SHAPE;
  } catch (const edgeguard::RangeError& e) {
    g_last_error = e.what();
    return EG_ERR_RANGE;
  } catch (const edgeguard::IoError& e) {
    g_last_error = e.what();
    return EG_ERR_IO;
  } catch (const edgeguard::NumericError& e) {
    g_last_error = e.what();
    return EG_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EG_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return EG_ERR_RUNTIME;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw edgeguard::InvalidArgument(std::string(what) + " is null");
}

void fill(const edgeguard::DetectionResult& r, eg_detection* out) {
  for (int k = 0; k < 3; ++k) {
    out->consistency[k] = r.consistencies[k];
    out->votes[k] = r.votes[k];
  }
  out->decision = r.decision;
}

void detect_into(const eg_model* model, const eg_thresholds* thresholds, const edgeguard::ImageTensor& image,
                 eg_detection* out) {
  const edgeguard::NetOutputs o = edgeguard::forward(model->net, image);
  fill(edgeguard::detect(image, o.depth, edgeguard::argmax_labels(o.probs), thresholds->set), out);
}

}  // namespace

extern "C" {

const char* eg_version(void) { return "0.1.0"; }

const char* eg_last_error(void) { return g_last_error.c_str(); }

const char* eg_status_name(eg_status status) {
  switch (status) {
    case EG_OK: return "ok";
    case EG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case EG_ERR_FORMAT: return "format error";
    case EG_ERR_SHAPE: return "shape error";
    case EG_ERR_RANGE: return "range error";
    case EG_ERR_IO: return "io error";
    case EG_ERR_NUMERIC: return "numeric error";
    case EG_ERR_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

size_t eg_command_count(void) { return edgeguard::command_names().size(); }

const char* eg_command_name(size_t index) {
  const auto& names = edgeguard::command_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

eg_status eg_command_key_count(const char* command, size_t* count) {
  return guarded([&] {
    require(command, "command");
    require(count, "count");
    *count = edgeguard::command_keys(command).size();
  });
}

eg_status eg_command_key(const char* command, size_t index, const char** name, const char** default_value,
                         const char** help, int* required) {
  return guarded([&] {
    require(command, "command");
    const auto& keys = edgeguard::command_keys(command);
    if (index >= keys.size()) throw edgeguard::RangeError("key index out of range");
    const auto& k = keys[index];
    if (name) *name = k.name.c_str();
    if (default_value) *default_value = k.default_value.c_str();
    if (help) *help = k.help.c_str();
    if (required) *required = k.required ? 1 : 0;
  });
}

eg_status eg_config_new(eg_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new eg_config();
  });
}

void eg_config_free(eg_config* config) { delete config; }

eg_status eg_config_set(eg_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    if (*key == '\0') throw edgeguard::InvalidArgument("empty config key");
    config->config.set(key, value);
  });
}

eg_status eg_config_get(const eg_config* config, const char* key, char* buf, size_t size) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(buf, "buf");
    if (!config->config.has(key)) throw edgeguard::InvalidArgument(std::string("key '") + key + "' is not set");
    const std::string v = config->config.str(key);
    if (v.size() + 1 > size) throw edgeguard::RangeError("buffer too small for value of " + std::string(key));
    std::memcpy(buf, v.c_str(), v.size() + 1);
  });
}

eg_status eg_run(const char* command, const eg_config* config, eg_log_fn log, void* user) {
  return guarded([&] {
    require(command, "command");
    const edgeguard::RunConfig empty;
    edgeguard::LogSink sink;
    if (log) sink = [log, user](const std::string& line) { log(line.c_str(), user); };
    edgeguard::run_command(command, config ? config->config : empty, sink);
  });
}

eg_status eg_model_load(const char* checkpoint_dir, eg_model** out) {
  return guarded([&] {
    require(checkpoint_dir, "checkpoint_dir");
    require(out, "out");
    *out = new eg_model{edgeguard::ToyNet::load(checkpoint_dir)};
  });
}

void eg_model_free(eg_model* model) { delete model; }

int eg_model_num_classes(const eg_model* model) { return model ? model->net.num_classes() : 0; }

eg_status eg_thresholds_load(const char* path, eg_thresholds** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new eg_thresholds{edgeguard::read_thresholds(path)};
  });
}

void eg_thresholds_free(eg_thresholds* thresholds) { delete thresholds; }

eg_status eg_thresholds_get(const eg_thresholds* thresholds, double theta[3], double* gamma, double* achieved_fpr) {
  return guarded([&] {
    require(thresholds, "thresholds");
    if (theta) {
      for (int k = 0; k < 3; ++k) theta[k] = thresholds->set.theta[k];
    }
    if (gamma) *gamma = thresholds->set.gamma;
    if (achieved_fpr) *achieved_fpr = thresholds->set.achieved_fpr;
  });
}

eg_status eg_detect_file(const eg_model* model, const eg_thresholds* thresholds, const char* image_path,
                         eg_detection* out) {
  return guarded([&] {
    require(model, "model");
    require(thresholds, "thresholds");
    require(image_path, "image_path");
    require(out, "out");
    const std::string p = image_path;
    const bool ppm = p.size() >= 4 && p.compare(p.size() - 4, 4, ".ppm") == 0;
    detect_into(model, thresholds, ppm ? edgeguard::load_ppm(p) : edgeguard::load_image(p), out);
  });
}

eg_status eg_detect_image(const eg_model* model, const eg_thresholds* thresholds, const float* pixels, int height,
                          int width, eg_detection* out) {
  return guarded([&] {
    require(model, "model");
    require(thresholds, "thresholds");
    require(pixels, "pixels");
    require(out, "out");
    if (height < 1 || width < 1) throw edgeguard::ShapeError("image must be at least 1x1");
    const std::size_t n = static_cast<std::size_t>(height) * width * 3;
    edgeguard::Grid<float> g(height, width, 3, std::vector<float>(pixels, pixels + n));
    detect_into(model, thresholds, edgeguard::ImageTensor(std::move(g)), out);
  });
}

}  // extern "C"
