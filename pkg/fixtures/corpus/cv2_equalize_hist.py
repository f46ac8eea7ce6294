import os
import cv2
arr = cv2.imread(os.environ["ORIGINAL_IMAGE_PATH"])
gray = cv2.cvtColor(arr, cv2.COLOR_BGR2GRAY)
out = cv2.equalizeHist(gray)
