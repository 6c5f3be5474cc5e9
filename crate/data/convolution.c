const int N = 8;
const int M = 8;
const int K = 3;

void convolve(int input_image[10][10], int kernel[3][3], int output_image[8][8])
{
    int i;
    int j;
    int ki;
    int kj;
    for (i = 0; i < N; i++) {
        for (j = 0; j < M; j++) {
            output_image[i][j] = 0;
            for (ki = 0; ki < K; ki++) {
                for (kj = 0; kj < K; kj++) {
                    output_image[i][j] = output_image[i][j] + input_image[i + ki][j + kj] * kernel[ki][kj];
                }
            }
        }
    }
}
