import os
import cv2
arr = cv2.imread(os.environ["ORIGINAL_IMAGE_PATH"])
edges = cv2.Canny(arr, 50, 150)
print(edges.shape)
