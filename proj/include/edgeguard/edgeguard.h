/* edgeguard C interface. All functions are thread compatible; the last error
 * message is kept per thread. */
#ifndef EDGEGUARD_H
#define EDGEGUARD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define EG_API __attribute__((visibility("default")))
#else
#define EG_API
#endif

typedef enum eg_status {
  EG_OK = 0,
  EG_ERR_INVALID_ARGUMENT = 1,
  EG_ERR_FORMAT = 2,
  EG_ERR_SHAPE = 3,
  EG_ERR_RANGE = 4,
  EG_ERR_IO = 5,
  EG_ERR_NUMERIC = 6,
  EG_ERR_RUNTIME = 7
} eg_status;

typedef struct eg_config eg_config;
typedef struct eg_model eg_model;
typedef struct eg_thresholds eg_thresholds;

typedef void (*eg_log_fn)(const char* line, void* user);

EG_API const char* eg_version(void);
/* Message for the most recent failure on this thread; "" when none. */
EG_API const char* eg_last_error(void);
EG_API const char* eg_status_name(eg_status status);

/* Command and key enumeration, used for usage text. Strings are static. */
EG_API size_t eg_command_count(void);
EG_API const char* eg_command_name(size_t index);
EG_API eg_status eg_command_key_count(const char* command, size_t* count);
EG_API eg_status eg_command_key(const char* command, size_t index, const char** name, const char** default_value,
                                const char** help, int* required);

EG_API eg_status eg_config_new(eg_config** out);
EG_API void eg_config_free(eg_config* config);
EG_API eg_status eg_config_set(eg_config* config, const char* key, const char* value);
/* Copies the value into buf (NUL terminated). EG_ERR_RANGE if buf is too small. */
EG_API eg_status eg_config_get(const eg_config* config, const char* key, char* buf, size_t size);

/* Runs a command. A "config" key names a key = value file whose entries fill
 * keys not set directly. Log lines go to the callback when one is given. */
EG_API eg_status eg_run(const char* command, const eg_config* config, eg_log_fn log, void* user);

EG_API eg_status eg_model_load(const char* checkpoint_dir, eg_model** out);
EG_API void eg_model_free(eg_model* model);
EG_API int eg_model_num_classes(const eg_model* model);

EG_API eg_status eg_thresholds_load(const char* path, eg_thresholds** out);
EG_API void eg_thresholds_free(eg_thresholds* thresholds);
/* theta receives the (mx, xd, md) thresholds. */
EG_API eg_status eg_thresholds_get(const eg_thresholds* thresholds, double theta[3], double* gamma,
                                   double* achieved_fpr);

typedef struct eg_detection {
  double consistency[3]; /* mx, xd, md */
  int votes[3];
  int decision;
} eg_detection;

/* Scores an image file (.egarr or binary .ppm) through the model. */
EG_API eg_status eg_detect_file(const eg_model* model, const eg_thresholds* thresholds, const char* image_path,
                                eg_detection* out);
/* Scores an HxWx3 image with values in [0, 1], row major. */
EG_API eg_status eg_detect_image(const eg_model* model, const eg_thresholds* thresholds, const float* pixels,
                                 int height, int width, eg_detection* out);

#ifdef __cplusplus
}
#endif

#endif
