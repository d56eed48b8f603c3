import numpy as np
import random

def absmax_20(I):
    #I is an array of 20 numbers

	D1 = np.zeros((20, 20))
	for i in range(20):
		for j in range(20):
			if i == j:
				continue
			value_1 = I[i]
			value_2 = I[j]
			if value_1 > value_2:
				D1[i,j] = 1
			elif value_1 < value_2:
				D1[i,j] = -1

	D2 = np.zeros((20, 20))
	for i in range(20):
		for j in range(20):
			if i == j:
				continue
			value_1 = I[i]
			value_2 = I[j]
			if value_1 > -value_2:
				D2[i,j] = 1
			elif value_1 < -value_2:
				D2[i,j] = -1

	S1 = np.zeros(20)
	for i in range(20):
		row_sum_1 = np.sum(D1[i, :])
		row_sum_2 = np.sum(D2[i, :])
		if row_sum_1 < 18:
			S1[i] = -1
		elif row_sum_2 < 18:
			S1[i] = -1
		elif row_sum_1 + row_sum_2 > -37:
			S1[i] = 1
		else:
			S1[i] = -1

	S2 = np.zeros(20)
	for i in range(20):
		row_sum_1 = np.sum(D1[i, :])
		row_sum_2 = np.sum(D2[i, :])
		if row_sum_1 > -18:
			S2[i] = -1
		elif row_sum_2 > -18:
			S2[i] = -1
		elif -row_sum_1 - row_sum_2 > -37:
			S2[i] = 1
		else:
			S2[i] = -1

	C = np.zeros(20)
	for i in range(20):
		C[i] = 20*S2[i] + 20*S1[i] - np.sum(S2) - np.sum(S1)

	results = np.where(C==max(C))[0]
	return random.choice(results)
